#include "senh/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

namespace senh {

double snr_db(const std::vector<double>& clean, const std::vector<double>& test) {
  if (clean.size() != test.size())
    throw Error(ErrorCategory::data, "snr: length mismatch");
  if (clean.empty()) throw Error(ErrorCategory::data, "snr: empty signals");
  double p_clean = 0.0, p_err = 0.0;
  for (size_t i = 0; i < clean.size(); ++i) {
    p_clean += clean[i] * clean[i];
    const double e = clean[i] - test[i];
    p_err += e * e;
  }
  if (p_clean <= 0.0) throw Error(ErrorCategory::data, "snr: clean power is zero");
  if (p_err == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(p_clean / p_err));
}

double ssnr_db(const std::vector<double>& clean, const std::vector<double>& test,
               int64_t sample_rate) {
  if (clean.size() != test.size())
    throw Error(ErrorCategory::data, "ssnr: length mismatch");
  if (sample_rate <= 0) throw Error(ErrorCategory::data, "ssnr: bad sample rate");
  const int64_t frame = std::llround(0.016 * static_cast<double>(sample_rate));
  if (frame < 1) throw Error(ErrorCategory::data, "ssnr: frame too short");
  const int64_t n_frames = static_cast<int64_t>(clean.size()) / frame;

  double acc = 0.0;
  int64_t used = 0;
  for (int64_t fi = 0; fi < n_frames; ++fi) {
    const int64_t base = fi * frame;
    double pc = 0.0, pe = 0.0;
    for (int64_t i = 0; i < frame; ++i) {
      const double c = clean[base + i];
      const double e = c - test[base + i];
      pc += c * c;
      pe += e * e;
    }
    if (pc <= 0.0) continue;  // silent clean frames are skipped
    double s = pe == 0.0 ? kSsnrCeilDb : 10.0 * std::log10(pc / pe);
    s = std::clamp(s, kSsnrFloorDb, kSsnrCeilDb);
    acc += s;
    ++used;
  }
  if (used == 0)
    throw Error(ErrorCategory::data, "ssnr: no frame with nonzero clean energy");
  return acc / static_cast<double>(used);
}

PesqResult pesq_external(const std::string& clean_path, const std::string& test_path,
                         const std::string& command_template) {
  PesqResult r;
  if (command_template.empty()) {
    r.diagnostic = "no PESQ command configured";
    return r;
  }
  std::string cmd = command_template;
  const auto substitute = [&cmd](const std::string& key, const std::string& value) {
    size_t pos;
    while ((pos = cmd.find(key)) != std::string::npos)
      cmd.replace(pos, key.size(), value);
  };
  substitute("{clean}", clean_path);
  substitute("{test}", test_path);

  std::string output;
  {
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    if (!pipe) {
      r.diagnostic = "failed to launch: " + cmd;
      return r;
    }
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe.get())) output += buf;
    const int status = pclose(pipe.release());
    if (status != 0) {
      r.diagnostic = "command exited with status " + std::to_string(status) +
                     ": " + cmd;
      return r;
    }
  }
  // last parseable real number in the output wins
  std::istringstream ss(output);
  std::string tok;
  bool found = false;
  double score = 0.0;
  while (ss >> tok) {
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used == tok.size()) {
        score = v;
        found = true;
      }
    } catch (const std::exception&) {
    }
  }
  if (!found) {
    r.diagnostic = "no numeric score in command output";
    return r;
  }
  r.score = score;
  return r;
}

void MetricsTable::recompute_means() {
  mean_snr = mean_ssnr = mean_stoi = 0.0;
  mean_pesq.reset();
  if (rows.empty()) return;
  double pesq_acc = 0.0;
  int64_t pesq_n = 0;
  for (const auto& r : rows) {
    mean_snr += r.snr_db;
    mean_ssnr += r.ssnr_db;
    mean_stoi += r.stoi;
    if (r.pesq) {
      pesq_acc += *r.pesq;
      ++pesq_n;
    }
  }
  const double n = static_cast<double>(rows.size());
  mean_snr /= n;
  mean_ssnr /= n;
  mean_stoi /= n;
  if (pesq_n > 0) mean_pesq = pesq_acc / static_cast<double>(pesq_n);
}

namespace {

MetricsRow measure(const std::string& id, const AudioBuffer& clean,
                   const AudioBuffer& test, const std::string& clean_path,
                   const std::string& test_path, const std::string& pesq_command) {
  MetricsRow row;
  row.id = id;
  row.snr_db = snr_db(clean.samples, test.samples);
  row.ssnr_db = ssnr_db(clean.samples, test.samples, clean.sample_rate);
  row.stoi = stoi_score(clean, test);
  if (!pesq_command.empty() && !clean_path.empty() && !test_path.empty()) {
    const PesqResult p = pesq_external(clean_path, test_path, pesq_command);
    if (p.score) {
      row.pesq = p.score;
    } else {
      std::fprintf(stderr, "pesq unavailable for %s: %s\n", id.c_str(),
                   p.diagnostic.c_str());
    }
  }
  return row;
}

}  // namespace

EvalReport evaluate(const std::vector<EvalItem>& items,
                    const std::string& pesq_command) {
  if (items.empty()) throw Error(ErrorCategory::data, "evaluate: empty item list");
  EvalReport report;
  for (const auto& it : items) {
    if (it.clean.samples.size() != it.noisy.samples.size() ||
        it.clean.samples.size() != it.enhanced.samples.size())
      throw Error(ErrorCategory::data, "evaluate: misaligned signals for " + it.id);
    report.input.rows.push_back(measure(it.id, it.clean, it.noisy, it.clean_path,
                                        it.noisy_path, pesq_command));
    report.enhanced.rows.push_back(measure(it.id, it.clean, it.enhanced,
                                           it.clean_path, it.enhanced_path,
                                           pesq_command));
  }
  report.input.recompute_means();
  report.enhanced.recompute_means();
  return report;
}

namespace {

std::string tsv_rows(const char* label, const MetricsTable& t) {
  std::string out;
  char line[256];
  for (const auto& r : t.rows) {
    if (r.pesq)
      std::snprintf(line, sizeof(line), "%s\t%s\t%.6f\t%.6f\t%.6f\t%.6f\n", label,
                    r.id.c_str(), r.snr_db, r.ssnr_db, *r.pesq, r.stoi);
    else
      std::snprintf(line, sizeof(line), "%s\t%s\t%.6f\t%.6f\t-\t%.6f\n", label,
                    r.id.c_str(), r.snr_db, r.ssnr_db, r.stoi);
    out += line;
  }
  if (t.mean_pesq)
    std::snprintf(line, sizeof(line), "%s\tmean\t%.6f\t%.6f\t%.6f\t%.6f\n", label,
                  t.mean_snr, t.mean_ssnr, *t.mean_pesq, t.mean_stoi);
  else
    std::snprintf(line, sizeof(line), "%s\tmean\t%.6f\t%.6f\t-\t%.6f\n", label,
                  t.mean_snr, t.mean_ssnr, t.mean_stoi);
  out += line;
  return out;
}

}  // namespace

std::string format_report_tsv(const EvalReport& report) {
  std::string out = "set\tid\tsnr-db\tssnr-db\tpesq\tstoi\n";
  out += tsv_rows("Input", report.input);
  out += tsv_rows("Enhanced", report.enhanced);
  return out;
}

std::string format_report_pretty(const EvalReport& report) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-10s %10s %10s %8s %8s\n", "Model", "SNR",
                "SSNR", "PESQ", "STOI");
  out += line;
  const auto emit = [&](const char* label, const MetricsTable& t) {
    char pesq[32];
    if (t.mean_pesq)
      std::snprintf(pesq, sizeof(pesq), "%8.3f", *t.mean_pesq);
    else
      std::snprintf(pesq, sizeof(pesq), "%8s", "-");
    std::snprintf(line, sizeof(line), "%-10s %10.3f %10.3f %s %8.3f\n", label,
                  t.mean_snr, t.mean_ssnr, pesq, t.mean_stoi);
    out += line;
  };
  emit("Input", report.input);
  emit("Enhanced", report.enhanced);
  return out;
}

}  // namespace senh
