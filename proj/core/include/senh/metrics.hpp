#ifndef SENH_METRICS_HPP
#define SENH_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "senh/audio.hpp"

namespace senh {

// 10*log10(sum clean^2 / sum (clean-test)^2), capped at +100 dB when the
// error power is exactly zero. Inputs are de-normalized, time-aligned signals.
double snr_db(const std::vector<double>& clean, const std::vector<double>& test);

// Segmental SNR: non-overlapping 16 ms frames, per-frame SNR clamped to
// [-10, +35] dB, frames with zero clean energy skipped, mean over the rest.
double ssnr_db(const std::vector<double>& clean, const std::vector<double>& test,
               int64_t sample_rate);

inline constexpr double kSsnrFloorDb = -10.0;
inline constexpr double kSsnrCeilDb = 35.0;
inline constexpr double kSnrCapDb = 100.0;

// Short-time objective intelligibility: both signals resampled to 10 kHz,
// 256-sample Hann frames at 50% overlap with 512-point spectra, frames more
// than 40 dB below the loudest clean frame dropped, 15 one-third-octave bands
// from 150 Hz, 30-frame segments with the test envelope normalized and
// clipped at -15 dB SDR, averaged band/segment correlations clipped to [0,1].
double stoi_score(const AudioBuffer& clean, const AudioBuffer& test);

struct PesqResult {
  std::optional<double> score;
  std::string diagnostic;  // set when the score is unavailable
};

// External-command adapter: substitutes {clean} and {test} into the template,
// runs it, and parses the last real number printed. No command configured or
// a failing command yields an unavailable score, never a fabricated one.
PesqResult pesq_external(const std::string& clean_path, const std::string& test_path,
                         const std::string& command_template);

struct MetricsRow {
  std::string id;
  double snr_db = 0.0;
  double ssnr_db = 0.0;
  double stoi = 0.0;
  std::optional<double> pesq;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;
  double mean_snr = 0.0;
  double mean_ssnr = 0.0;
  double mean_stoi = 0.0;
  std::optional<double> mean_pesq;

  void recompute_means();
};

// Table-shaped evaluation: one row per utterance for the raw noisy input and
// for the enhanced output, plus per-column means.
struct EvalReport {
  MetricsTable input;
  MetricsTable enhanced;
};

struct EvalItem {
  std::string id;
  AudioBuffer clean;
  AudioBuffer noisy;
  AudioBuffer enhanced;
  // file paths for the PESQ adapter; empty when not materialized
  std::string clean_path;
  std::string noisy_path;
  std::string enhanced_path;
};

EvalReport evaluate(const std::vector<EvalItem>& items,
                    const std::string& pesq_command = "");

std::string format_report_tsv(const EvalReport& report);
std::string format_report_pretty(const EvalReport& report);

}  // namespace senh

#endif  // SENH_METRICS_HPP
