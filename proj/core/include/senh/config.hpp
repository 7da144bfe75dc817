#ifndef SENH_CONFIG_HPP
#define SENH_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "senh/model.hpp"
#include "senh/pipeline.hpp"

namespace senh {

struct TrainConfig {
  uint32_t seed = 0;  // mandatory; parse fails when absent
  double lr = 1e-4;
  int64_t batch = 8;
  int64_t max_steps = 2000;
  int64_t eval_interval = 100;
  int64_t patience = 10;       // evaluations without val improvement
  double target_l1 = 0.0;      // early exit when train L1 drops below; 0 = off
  std::string ckpt_dir = "ckpt";
};

struct DataConfig {
  std::string manifest;
  int64_t rate = 16000;
  double clip_seconds = 1.0;
  double hop_seconds = 0.5;
};

struct PrepareOptions {
  // synth mode by default; raw mode when clean_dir is set
  std::string clean_dir;
  std::string noise_dir;
  std::string out_dir = "corpus";
  int64_t utterances = 20;
  std::vector<double> snr_levels_db = {15.0, 10.0, 5.0, 0.0};
  std::vector<std::string> noises = {"white", "pink", "babble"};
  double min_seconds = 2.0;
  double max_seconds = 3.0;
};

struct EvalConfig {
  std::string pesq_command;
  std::string out_dir = "reports";
};

// Flat key=value experiment description; unknown keys are rejected.
struct ExperimentConfig {
  UNetConfig model;
  TrainConfig train;
  DataConfig data;
  PrepareOptions prepare;
  EvalConfig eval;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);
};

// Lines of `key = value`; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_flat_kv(const std::string& text);

std::vector<int64_t> parse_int_list(const std::string& csv);
std::vector<double> parse_double_list(const std::string& csv);

}  // namespace senh

#endif  // SENH_CONFIG_HPP
