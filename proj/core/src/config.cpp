#include "senh/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace senh {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_flat_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCategory::config,
                  "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCategory::config, "line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key))
      throw Error(ErrorCategory::config, "duplicate key: " + key);
    kv[key] = value;
  }
  return kv;
}

std::vector<int64_t> parse_int_list(const std::string& csv) {
  std::vector<int64_t> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoll(tok));
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  auto kv = parse_flat_kv(text);
  ExperimentConfig cfg;

  const auto take = [&kv](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::string();
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  const auto take_or = [&take](const std::string& key, const std::string& dflt) {
    const std::string v = take(key);
    return v.empty() ? dflt : v;
  };

  // model
  cfg.model.variant = variant_from_string(take_or("model.variant", "baseline"));
  if (const std::string v = take("model.widths"); !v.empty())
    cfg.model.widths = parse_int_list(v);
  cfg.model.kernel = std::stoll(take_or("model.kernel", "30"));
  if (const std::string v = take("model.aspp_factors"); !v.empty())
    cfg.model.aspp_factors = parse_int_list(v);
  cfg.model.activation_slope = std::stof(take_or("model.activation_slope", "0.2"));

  // data
  cfg.data.manifest = take("data.manifest");
  cfg.data.rate = std::stoll(take_or("data.rate", "16000"));
  cfg.data.clip_seconds = std::stod(take_or("data.clip_seconds", "1.0"));
  cfg.data.hop_seconds = std::stod(take_or("data.hop_seconds", "0.5"));
  cfg.model.sample_rate = cfg.data.rate;

  // train
  const std::string seed = take("train.seed");
  if (seed.empty())
    throw Error(ErrorCategory::config, "train.seed is mandatory");
  cfg.train.seed = static_cast<uint32_t>(std::stoul(seed));
  cfg.train.lr = std::stod(take_or("train.lr", "1e-4"));
  cfg.train.batch = std::stoll(take_or("train.batch", "8"));
  cfg.train.max_steps = std::stoll(take_or("train.max_steps", "2000"));
  cfg.train.eval_interval = std::stoll(take_or("train.eval_interval", "100"));
  cfg.train.patience = std::stoll(take_or("train.patience", "10"));
  cfg.train.target_l1 = std::stod(take_or("train.target_l1", "0"));
  cfg.train.ckpt_dir = take_or("train.ckpt_dir", "ckpt");
  if (const char* env = std::getenv("SENH_CKPT_DIR"); env && *env)
    cfg.train.ckpt_dir = env;

  // prepare
  cfg.prepare.clean_dir = take("prepare.clean_dir");
  cfg.prepare.noise_dir = take("prepare.noise_dir");
  cfg.prepare.out_dir = take_or("prepare.out_dir", "corpus");
  cfg.prepare.utterances = std::stoll(take_or("prepare.utterances", "20"));
  if (const std::string v = take("prepare.snr_levels"); !v.empty())
    cfg.prepare.snr_levels_db = parse_double_list(v);
  if (const std::string v = take("prepare.noises"); !v.empty()) {
    cfg.prepare.noises.clear();
    std::istringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.prepare.noises.push_back(tok);
  }
  cfg.prepare.min_seconds = std::stod(take_or("prepare.min_seconds", "2.0"));
  cfg.prepare.max_seconds = std::stod(take_or("prepare.max_seconds", "3.0"));

  // eval
  cfg.eval.pesq_command = take("eval.pesq_command");
  cfg.eval.out_dir = take_or("eval.out_dir", "reports");

  if (!kv.empty()) {
    std::string unknown;
    for (const auto& [k, _] : kv) unknown += (unknown.empty() ? "" : ", ") + k;
    throw Error(ErrorCategory::config, "unknown config keys: " + unknown);
  }

  cfg.model.validate();
  if (cfg.train.batch < 1 || cfg.train.max_steps < 1 || cfg.train.eval_interval < 1)
    throw Error(ErrorCategory::config, "train.batch/max_steps/eval_interval must be >= 1");
  if (!(cfg.train.lr > 0))
    throw Error(ErrorCategory::config, "train.lr must be > 0");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCategory::io, "cannot open config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return from_string(ss.str());
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCategory::config, path + ": " + e.what());
  }
}

}  // namespace senh
