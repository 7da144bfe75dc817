#include "senh/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace senh {

namespace {

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "white") return NoiseKind::white;
  if (s == "pink") return NoiseKind::pink;
  if (s == "babble") return NoiseKind::babble;
  throw Error(ErrorCategory::config, "unknown noise kind: " + s);
}

std::vector<std::string> list_wavs(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav")
      out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

DatasetManifest prepare_raw(const ExperimentConfig& cfg, std::ostream& log) {
  const auto clean_files = list_wavs(cfg.prepare.clean_dir);
  const auto noise_files = list_wavs(cfg.prepare.noise_dir);
  if (clean_files.empty())
    throw Error(ErrorCategory::data, "empty corpus: no WAV files in " +
                                         cfg.prepare.clean_dir);
  if (noise_files.empty())
    throw Error(ErrorCategory::data, "empty corpus: no WAV files in " +
                                         cfg.prepare.noise_dir);
  std::filesystem::create_directories(cfg.prepare.out_dir);

  std::vector<AudioBuffer> noises;
  for (const auto& p : noise_files) noises.push_back(resample(load_wav(p), cfg.data.rate));

  DatasetManifest manifest;
  manifest.sample_rate = cfg.data.rate;
  char name[256];
  for (size_t u = 0; u < clean_files.size(); ++u) {
    const AudioBuffer clean = resample(load_wav(clean_files[u]), cfg.data.rate);
    for (size_t si = 0; si < cfg.prepare.snr_levels_db.size(); ++si) {
      const double snr = cfg.prepare.snr_levels_db[si];
      std::mt19937 rng(cfg.train.seed ^
                       (0x85ebca6bu * static_cast<uint32_t>(u * 131 + si + 7)));
      const AudioBuffer& noise = noises[(u + si) % noises.size()];
      AudioBuffer noisy{cfg.data.rate,
                        mix_at_snr(clean.samples, noise.samples, snr, rng)};

      double peak = 0.0;
      for (double v : noisy.samples) peak = std::max(peak, std::fabs(v));
      for (double v : clean.samples) peak = std::max(peak, std::fabs(v));
      AudioBuffer cscaled = clean;
      if (peak > 0.99) {
        const double gain = 0.99 / peak;
        for (double& v : cscaled.samples) v *= gain;
        for (double& v : noisy.samples) v *= gain;
      }

      ManifestEntry e;
      std::snprintf(name, sizeof(name), "clean_u%03zu_s%02zu.wav", u, si);
      e.clean_path = (std::filesystem::path(cfg.prepare.out_dir) / name).string();
      std::snprintf(name, sizeof(name), "noisy_u%03zu_s%02zu.wav", u, si);
      e.noisy_path = (std::filesystem::path(cfg.prepare.out_dir) / name).string();
      e.noise_kind = std::filesystem::path(noise_files[(u + si) % noises.size()])
                         .stem()
                         .string();
      e.snr_db = snr;
      write_wav(e.clean_path, cscaled);
      write_wav(e.noisy_path, noisy);
      manifest.entries.push_back(std::move(e));
    }
  }
  split_dataset(manifest, cfg.train.seed);
  log << "prepared " << manifest.entries.size() << " pairs from "
      << clean_files.size() << " clean files\n";
  return manifest;
}

}  // namespace

DatasetManifest run_prepare(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.data.manifest.empty())
    throw Error(ErrorCategory::config, "data.manifest must be set for prepare");

  DatasetManifest manifest;
  if (!cfg.prepare.clean_dir.empty()) {
    manifest = prepare_raw(cfg, log);
  } else {
    SynthSpec spec;
    spec.utterances = cfg.prepare.utterances;
    spec.snr_levels_db = cfg.prepare.snr_levels_db;
    spec.noise_kinds.clear();
    for (const auto& n : cfg.prepare.noises)
      spec.noise_kinds.push_back(noise_kind_from_string(n));
    spec.sample_rate = cfg.data.rate;
    spec.min_seconds = cfg.prepare.min_seconds;
    spec.max_seconds = cfg.prepare.max_seconds;
    spec.seed = cfg.train.seed;
    spec.out_dir = cfg.prepare.out_dir;
    manifest = synth_corpus(spec);
    log << "synthesized " << manifest.entries.size() << " pairs ("
        << cfg.prepare.utterances << " utterances x "
        << cfg.prepare.snr_levels_db.size() << " SNR levels)\n";
  }
  write_manifest(manifest, cfg.data.manifest);
  log << "manifest written to " << cfg.data.manifest << "\n";
  return manifest;
}

ClipSet load_clips(const DatasetManifest& manifest, Split split,
                   const DataConfig& data) {
  const auto entries = manifest.of_split(split);
  if (entries.empty())
    throw Error(ErrorCategory::data,
                std::string("no entries in split '") + to_string(split) + "'");
  const int64_t clip_len = std::llround(data.clip_seconds * data.rate);
  const int64_t hop = std::llround(data.hop_seconds * data.rate);
  if (clip_len < 1 || hop < 1)
    throw Error(ErrorCategory::config, "clip/hop must be positive");

  ClipSet set;
  set.clip_len = clip_len;
  for (const auto& e : entries) {
    const AudioBuffer clean = load_wav(e.clean_path);
    const AudioBuffer noisy = load_wav(e.noisy_path);
    if (clean.sample_rate != data.rate || noisy.sample_rate != data.rate)
      throw Error(ErrorCategory::data,
                  e.clean_path + ": rate differs from data.rate; re-run prepare");
    if (clean.samples.size() != noisy.samples.size())
      throw Error(ErrorCategory::data, e.clean_path + ": pair length mismatch");

    // Pair normalization uses the noisy peak; at inference only the noisy
    // signal exists.
    std::vector<double> noisy_n = noisy.samples;
    const NormMeta meta = normalize(noisy_n);
    const std::vector<double> clean_n = normalized_copy(clean.samples, meta);

    auto clips = segment(clean_n, noisy_n, clip_len, hop,
                         std::filesystem::path(e.noisy_path).stem().string(), meta);
    for (auto& c : clips) set.clips.push_back(std::move(c));
  }
  if (set.clips.empty())
    throw Error(ErrorCategory::data, "split produced no clips (utterances too short?)");
  return set;
}

namespace {

// Assembles (batch, 1, clip_len) noisy/clean/mask tensors for given clips.
void fill_batch(const ClipSet& set, const std::vector<size_t>& idx, TensorF& noisy,
                TensorF& clean, TensorF& mask) {
  const int64_t b = static_cast<int64_t>(idx.size());
  const int64_t len = set.clip_len;
  noisy = TensorF(b, 1, len);
  clean = TensorF(b, 1, len);
  mask = TensorF(b, 1, len);
  for (int64_t i = 0; i < b; ++i) {
    const ClipPair& c = set.clips[idx[i]];
    float* nr = noisy.row(i, 0);
    float* cr = clean.row(i, 0);
    float* mr = mask.row(i, 0);
    for (int64_t j = 0; j < len; ++j) {
      nr[j] = static_cast<float>(c.noisy[j]);
      cr[j] = static_cast<float>(c.clean[j]);
      mr[j] = j < c.valid_len ? 1.0f : 0.0f;
    }
  }
}

// Masked mean L1 of the model over a whole clip set (no gradients).
double dataset_l1(Model& model, const ClipSet& set, int64_t batch) {
  double num = 0.0, den = 0.0;
  std::vector<size_t> idx;
  for (size_t start = 0; start < set.clips.size(); start += batch) {
    idx.clear();
    for (size_t i = start; i < std::min(set.clips.size(), start + batch); ++i)
      idx.push_back(i);
    TensorF noisy, clean, mask;
    fill_batch(set, idx, noisy, clean, mask);
    TapeF tape;
    const auto out = model.forward(tape, tape.input(&noisy, nullptr));
    const TensorF& y = tape.value(out);
    for (int64_t i = 0; i < y.size(); ++i) {
      const double m = mask.v[i];
      num += m * std::fabs(double(y.v[i]) - double(clean.v[i]));
      den += m;
    }
  }
  return num / den;
}

}  // namespace

TrainResult run_training(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.data.manifest.empty())
    throw Error(ErrorCategory::config, "data.manifest must be set for training");
  const DatasetManifest manifest = read_manifest(cfg.data.manifest);
  const ClipSet train_set = load_clips(manifest, Split::train, cfg.data);
  const ClipSet val_set = load_clips(manifest, Split::val, cfg.data);
  if (train_set.clip_len % UNetConfig::length_multiple != 0)
    throw Error(ErrorCategory::config,
                "clip length " + std::to_string(train_set.clip_len) +
                    " must be divisible by " +
                    std::to_string(UNetConfig::length_multiple));

  Model model = Model::build(cfg.model, cfg.train.seed);
  auto params = model.trainable();
  AdamConfig acfg;
  acfg.lr = cfg.train.lr;
  AdamOptimizer<float> opt(acfg);

  log << "training variant=" << to_string(cfg.model.variant)
      << " params=" << model.param_count() << " train-clips=" << train_set.clips.size()
      << " val-clips=" << val_set.clips.size() << "\n";

  std::filesystem::create_directories(cfg.train.ckpt_dir);
  const std::string best_path =
      (std::filesystem::path(cfg.train.ckpt_dir) / "best.ckpt").string();

  TrainResult result;
  result.best_val_l1 = std::numeric_limits<double>::infinity();
  std::mt19937 rng(cfg.train.seed);
  std::vector<size_t> order(train_set.clips.size());
  std::iota(order.begin(), order.end(), size_t{0});
  size_t cursor = order.size();  // trigger reshuffle on first step
  int64_t evals_since_best = 0;
  std::vector<size_t> idx;

  for (int64_t step = 1; step <= cfg.train.max_steps; ++step) {
    idx.clear();
    for (int64_t i = 0; i < cfg.train.batch; ++i) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      idx.push_back(order[cursor++]);
    }
    TensorF noisy, clean, mask;
    fill_batch(train_set, idx, noisy, clean, mask);

    for (auto* p : params) p->zero_grad();
    TapeF tape;
    const auto out = model.forward(tape, tape.input(&noisy, nullptr));
    const auto loss = tape.l1_loss_masked(out, tape.constant(std::move(clean)),
                                          tape.constant(std::move(mask)));
    const float loss_value = tape.value(loss).v[0];
    if (!std::isfinite(loss_value))
      throw Error(ErrorCategory::train,
                  "diverged: non-finite loss at step " + std::to_string(step));
    tape.backward(loss);
    opt.step(params);
    result.loss_curve.push_back(loss_value);
    result.steps = step;

    if (step % cfg.train.eval_interval == 0 || step == cfg.train.max_steps) {
      const double val_l1 = dataset_l1(model, val_set, cfg.train.batch);
      result.val_history.emplace_back(step, val_l1);
      const bool improved = val_l1 < result.best_val_l1;
      if (improved) {
        result.best_val_l1 = val_l1;
        save_checkpoint(model, best_path);
        result.best_ckpt_path = best_path;
        evals_since_best = 0;
      } else {
        ++evals_since_best;
      }
      char line[160];
      std::snprintf(line, sizeof(line),
                    "step %6lld  train-l1 %.6f  val-l1 %.6f%s\n",
                    static_cast<long long>(step), double(loss_value), val_l1,
                    improved ? "  *" : "");
      log << line << std::flush;

      if (cfg.train.target_l1 > 0.0) {
        const double train_l1 = dataset_l1(model, train_set, cfg.train.batch);
        if (train_l1 < cfg.train.target_l1) {
          log << "target train L1 reached at step " << step << " (" << train_l1
              << ")\n";
          break;
        }
      }
      if (evals_since_best > cfg.train.patience) {
        log << "early stop: no val improvement for " << evals_since_best
            << " evaluations\n";
        break;
      }
    }
  }

  result.final_train_l1 = dataset_l1(model, train_set, cfg.train.batch);
  if (result.best_ckpt_path.empty()) {
    save_checkpoint(model, best_path);
    result.best_ckpt_path = best_path;
    result.best_val_l1 = dataset_l1(model, val_set, cfg.train.batch);
  }
  log << "final train-l1 " << result.final_train_l1 << ", best val-l1 "
      << result.best_val_l1 << ", checkpoint " << result.best_ckpt_path << "\n";
  return result;
}

EvalReport run_evaluation(Model& model, const DatasetManifest& manifest, Split split,
                          const std::string& out_dir, const std::string& pesq_command,
                          std::ostream& log) {
  const auto entries = manifest.of_split(split);
  if (entries.empty())
    throw Error(ErrorCategory::data,
                std::string("empty split '") + to_string(split) + "'");
  std::filesystem::create_directories(out_dir);
  const auto enhanced_dir = std::filesystem::path(out_dir) / "enhanced";
  std::filesystem::create_directories(enhanced_dir);

  std::vector<EvalItem> items;
  for (const auto& e : entries) {
    EvalItem it;
    it.id = std::filesystem::path(e.noisy_path).stem().string();
    it.clean = load_wav(e.clean_path);
    it.noisy = load_wav(e.noisy_path);
    std::vector<double> probe = it.noisy.samples;
    const NormMeta meta = normalize(probe);
    it.enhanced = model.enhance(it.noisy, meta);
    it.clean_path = e.clean_path;
    it.noisy_path = e.noisy_path;
    it.enhanced_path = (enhanced_dir / (it.id + "_enh.wav")).string();
    write_wav(it.enhanced_path, it.enhanced);
    // metrics compare de-normalized 16-bit material; re-read for bit parity
    it.enhanced = load_wav(it.enhanced_path);
    items.push_back(std::move(it));
  }
  const EvalReport report = evaluate(items, pesq_command);

  const std::string tsv = format_report_tsv(report);
  const std::string pretty = format_report_pretty(report);
  {
    std::ofstream f(std::filesystem::path(out_dir) / "report.tsv");
    f << tsv;
  }
  {
    std::ofstream f(std::filesystem::path(out_dir) / "report.txt");
    f << pretty;
  }
  log << pretty;
  return report;
}

}  // namespace senh
