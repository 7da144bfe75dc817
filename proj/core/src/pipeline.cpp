#include "senh/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace senh {

NormMeta normalize(std::vector<double>& samples) {
  double peak = 0.0;
  for (double x : samples) peak = std::max(peak, std::fabs(x));
  NormMeta meta;
  meta.scale = peak > 0.0 ? 2.0 * peak : 1.0;
  meta.offset = 0.5;
  for (double& x : samples) x = x / meta.scale + meta.offset;
  return meta;
}

void denormalize(std::vector<double>& samples, const NormMeta& meta) {
  for (double& x : samples) x = (x - meta.offset) * meta.scale;
}

std::vector<double> normalized_copy(const std::vector<double>& samples,
                                    const NormMeta& meta) {
  std::vector<double> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i)
    out[i] = samples[i] / meta.scale + meta.offset;
  return out;
}

int64_t segment_clip_count(int64_t length, int64_t clip_len, int64_t hop) {
  const int64_t n_full = length >= clip_len ? (length - clip_len) / hop + 1 : 0;
  const int64_t coverage_end = n_full > 0 ? (n_full - 1) * hop + clip_len : 0;
  const int64_t tail = length - n_full * hop;  // real samples at the next start
  const bool trailer = length > coverage_end && tail >= clip_len / 2;
  return n_full + (trailer ? 1 : 0);
}

std::vector<ClipPair> segment(const std::vector<double>& clean,
                              const std::vector<double>& noisy, int64_t clip_len,
                              int64_t hop, const std::string& source_id,
                              const NormMeta& meta) {
  if (clean.size() != noisy.size())
    throw Error(ErrorCategory::data,
                "segment: clean and noisy lengths differ (" +
                    std::to_string(clean.size()) + " vs " +
                    std::to_string(noisy.size()) + ")");
  if (clip_len < 1 || hop < 1)
    throw Error(ErrorCategory::data, "segment: clip and hop must be >= 1");

  const int64_t length = static_cast<int64_t>(clean.size());
  const int64_t n_full = length >= clip_len ? (length - clip_len) / hop + 1 : 0;
  const int64_t total = segment_clip_count(length, clip_len, hop);

  std::vector<ClipPair> clips;
  clips.reserve(total);
  for (int64_t i = 0; i < total; ++i) {
    const int64_t start = i * hop;
    const int64_t valid = std::min(clip_len, length - start);
    ClipPair p;
    p.source_id = source_id;
    p.start = start;
    p.valid_len = valid;
    p.meta = meta;
    p.clean.assign(clip_len, 0.0);
    p.noisy.assign(clip_len, 0.0);
    std::copy(clean.begin() + start, clean.begin() + start + valid, p.clean.begin());
    std::copy(noisy.begin() + start, noisy.begin() + start + valid, p.noisy.begin());
    clips.push_back(std::move(p));
  }
  (void)n_full;
  return clips;
}

double signal_power(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

std::vector<double> mix_at_snr(const std::vector<double>& clean,
                               const std::vector<double>& noise,
                               double target_snr_db, std::mt19937& rng) {
  if (clean.empty() || noise.empty())
    throw Error(ErrorCategory::data, "mix_at_snr: empty signal");
  // Crop or tile the noise from a seeded offset so it covers the clean span.
  std::uniform_int_distribution<size_t> dist(0, noise.size() - 1);
  const size_t offset = dist(rng);
  std::vector<double> seg(clean.size());
  for (size_t i = 0; i < clean.size(); ++i)
    seg[i] = noise[(offset + i) % noise.size()];

  const double p_clean = signal_power(clean);
  const double p_noise = signal_power(seg);
  if (p_clean <= 0.0)
    throw Error(ErrorCategory::data, "mix_at_snr: clean power is zero");
  if (p_noise <= 0.0)
    throw Error(ErrorCategory::data, "mix_at_snr: noise power is zero");

  const double alpha =
      std::sqrt(p_clean / p_noise) * std::pow(10.0, -target_snr_db / 20.0);
  std::vector<double> noisy(clean.size());
  for (size_t i = 0; i < clean.size(); ++i) noisy[i] = clean[i] + alpha * seg[i];
  return noisy;
}

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw Error(ErrorCategory::format, "unknown split name: " + s);
}

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::white: return "white";
    case NoiseKind::pink: return "pink";
    case NoiseKind::babble: return "babble";
  }
  return "?";
}

std::vector<ManifestEntry> DatasetManifest::of_split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCategory::io, "cannot create " + path);
  f << "#senh-manifest v1 seed=" << m.seed << " rate=" << m.sample_rate << "\n";
  f << "path-clean\tpath-noisy\tsplit\tnoise-kind\tsnr-db\n";
  char snr[32];
  for (const auto& e : m.entries) {
    std::snprintf(snr, sizeof(snr), "%.6g", e.snr_db);
    f << e.clean_path << '\t' << e.noisy_path << '\t' << to_string(e.split) << '\t'
      << e.noise_kind << '\t' << snr << '\n';
  }
  if (!f) throw Error(ErrorCategory::io, "short write to " + path);
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCategory::io, "cannot open " + path);
  DatasetManifest m;
  std::string line;
  if (!std::getline(f, line) || line.rfind("#senh-manifest v1", 0) != 0)
    throw Error(ErrorCategory::format, path + ": missing manifest header");
  {
    std::istringstream hs(line);
    std::string tok;
    while (hs >> tok) {
      if (tok.rfind("seed=", 0) == 0) m.seed = std::stoul(tok.substr(5));
      if (tok.rfind("rate=", 0) == 0) m.sample_rate = std::stoll(tok.substr(5));
    }
  }
  if (!std::getline(f, line) || line.rfind("path-clean\t", 0) != 0)
    throw Error(ErrorCategory::format, path + ": missing column header");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string split_name, snr;
    if (!std::getline(ls, e.clean_path, '\t') ||
        !std::getline(ls, e.noisy_path, '\t') ||
        !std::getline(ls, split_name, '\t') ||
        !std::getline(ls, e.noise_kind, '\t') || !std::getline(ls, snr))
      throw Error(ErrorCategory::format, path + ": malformed row: " + line);
    e.split = split_from_string(split_name);
    e.snr_db = std::stod(snr);
    m.entries.push_back(std::move(e));
  }
  return m;
}

void split_dataset(DatasetManifest& manifest, uint32_t seed) {
  const size_t n = manifest.entries.size();
  if (n < 10)
    throw Error(ErrorCategory::data,
                "split_dataset needs at least 10 entries, got " + std::to_string(n));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const size_t n_train = (n * 8) / 10;  // floor(0.8 n)
  const size_t n_val = n / 10;          // floor(0.1 n)
  for (size_t pos = 0; pos < n; ++pos) {
    Split s = pos < n_train           ? Split::train
              : pos < n_train + n_val ? Split::val
                                      : Split::test;
    manifest.entries[order[pos]].split = s;
  }
  manifest.seed = seed;
}

namespace {

double urand(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

std::vector<double> synth_utterance(int64_t n, int64_t rate, std::mt19937& rng) {
  std::vector<double> x(n, 0.0);
  const double dt = 1.0 / static_cast<double>(rate);
  int64_t pos = 0;
  while (pos < n) {
    // Voiced "syllable": a low fundamental with harmonics plus one
    // formant-like tone, AM-shaped; occasionally a chirp instead.
    const int64_t seg = static_cast<int64_t>(urand(rng, 0.08, 0.25) * rate);
    const int64_t end = std::min(n, pos + seg);
    const bool chirp = urand(rng, 0.0, 1.0) < 0.25;
    const double f0 = urand(rng, 120.0, 300.0);
    const double formant = urand(rng, 500.0, 2500.0);
    const double f1 = chirp ? urand(rng, 300.0, 3000.0) : 0.0;
    const double slope = chirp ? urand(rng, -2000.0, 2000.0) : 0.0;
    const double a0 = urand(rng, 0.4, 0.9);
    const double phase0 = urand(rng, 0.0, 2.0 * M_PI);
    const double phase1 = urand(rng, 0.0, 2.0 * M_PI);
    const int64_t len = end - pos;
    for (int64_t i = 0; i < len; ++i) {
      const double t = i * dt;
      // raised-cosine attack/decay envelope
      const double env = 0.5 * (1.0 - std::cos(2.0 * M_PI * (i + 1) / (len + 1)));
      double v;
      if (chirp) {
        v = std::sin(2.0 * M_PI * (f1 * t + 0.5 * slope * t * t) + phase0);
      } else {
        v = 0.6 * std::sin(2.0 * M_PI * f0 * t + phase0) +
            0.3 * std::sin(2.0 * M_PI * 2.0 * f0 * t + 0.7 * phase1) +
            0.35 * std::sin(2.0 * M_PI * formant * t + phase1);
      }
      x[pos + i] = a0 * env * v;
    }
    pos = end;
    // short pause between syllables
    pos += static_cast<int64_t>(urand(rng, 0.02, 0.08) * rate);
  }
  // headroom so mixing rarely clips
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0)
    for (double& v : x) v *= 0.7 / peak;
  return x;
}

std::vector<double> synth_noise(NoiseKind kind, int64_t n, int64_t rate,
                                std::mt19937& rng) {
  std::vector<double> x(n, 0.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  switch (kind) {
    case NoiseKind::white: {
      for (double& v : x) v = 0.25 * gauss(rng);
      break;
    }
    case NoiseKind::pink: {
      // Voss-McCartney: sum of octave-decimated white sources.
      constexpr int kRows = 12;
      double rows[kRows];
      for (double& r : rows) r = gauss(rng);
      for (int64_t i = 0; i < n; ++i) {
        for (int b = 0; b < kRows; ++b)
          if (i % (int64_t(1) << b) == 0) rows[b] = gauss(rng);
        double s = 0.0;
        for (double r : rows) s += r;
        x[i] = 0.07 * s;
      }
      break;
    }
    case NoiseKind::babble: {
      // Babble proxy: a bed of detuned tones with slow AM wander.
      constexpr int kTones = 16;
      const double dt = 1.0 / static_cast<double>(rate);
      double freq[kTones], amp[kTones], mod[kTones], ph[kTones], mph[kTones];
      for (int k = 0; k < kTones; ++k) {
        freq[k] = urand(rng, 100.0, 3800.0);
        amp[k] = urand(rng, 0.05, 0.20);
        mod[k] = urand(rng, 0.5, 8.0);
        ph[k] = urand(rng, 0.0, 2.0 * M_PI);
        mph[k] = urand(rng, 0.0, 2.0 * M_PI);
      }
      for (int64_t i = 0; i < n; ++i) {
        const double t = i * dt;
        double s = 0.0;
        for (int k = 0; k < kTones; ++k)
          s += amp[k] * (0.6 + 0.4 * std::sin(2.0 * M_PI * mod[k] * t + mph[k])) *
               std::sin(2.0 * M_PI * freq[k] * t + ph[k]);
        x[i] = s;
      }
      break;
    }
  }
  return x;
}

DatasetManifest synth_corpus(const SynthSpec& spec) {
  if (spec.utterances < 1)
    throw Error(ErrorCategory::data, "synth_corpus: empty spec (no utterances)");
  if (spec.snr_levels_db.empty() || spec.noise_kinds.empty())
    throw Error(ErrorCategory::data, "synth_corpus: need at least one SNR and noise kind");
  if (spec.out_dir.empty())
    throw Error(ErrorCategory::config, "synth_corpus: out_dir not set");
  std::filesystem::create_directories(spec.out_dir);

  DatasetManifest manifest;
  manifest.seed = spec.seed;
  manifest.sample_rate = spec.sample_rate;

  char name[256];
  for (int64_t u = 0; u < spec.utterances; ++u) {
    // Per-utterance seeds keep materialization order-independent.
    std::mt19937 urng(spec.seed ^ (0x9e3779b9u * static_cast<uint32_t>(u + 1)));
    const double secs = urand(urng, spec.min_seconds, spec.max_seconds);
    const int64_t n = static_cast<int64_t>(secs * spec.sample_rate);
    const std::vector<double> clean = synth_utterance(n, spec.sample_rate, urng);

    for (size_t si = 0; si < spec.snr_levels_db.size(); ++si) {
      const double snr = spec.snr_levels_db[si];
      std::mt19937 mrng(spec.seed ^
                        (0x85ebca6bu * static_cast<uint32_t>(u * 131 + si + 7)));
      const NoiseKind kind =
          spec.noise_kinds[(u + si) % spec.noise_kinds.size()];
      std::vector<double> noise = synth_noise(kind, n, spec.sample_rate, mrng);
      std::vector<double> noisy = mix_at_snr(clean, noise, snr, mrng);

      // Common headroom scaling keeps 16-bit writes clip-free and the pair's
      // SNR untouched.
      double peak = 0.0;
      for (double v : noisy) peak = std::max(peak, std::fabs(v));
      for (double v : clean) peak = std::max(peak, std::fabs(v));
      const double gain = peak > 0.99 ? 0.99 / peak : 1.0;
      AudioBuffer cbuf{spec.sample_rate, clean};
      AudioBuffer nbuf{spec.sample_rate, std::move(noisy)};
      if (gain != 1.0) {
        for (double& v : cbuf.samples) v *= gain;
        for (double& v : nbuf.samples) v *= gain;
      }

      ManifestEntry e;
      std::snprintf(name, sizeof(name), "clean_u%03lld_s%02zu.wav",
                    static_cast<long long>(u), si);
      e.clean_path = (std::filesystem::path(spec.out_dir) / name).string();
      std::snprintf(name, sizeof(name), "noisy_u%03lld_s%02zu_%s.wav",
                    static_cast<long long>(u), si, to_string(kind));
      e.noisy_path = (std::filesystem::path(spec.out_dir) / name).string();
      e.noise_kind = to_string(kind);
      e.snr_db = snr;
      write_wav(e.clean_path, cbuf);
      write_wav(e.noisy_path, nbuf);
      manifest.entries.push_back(std::move(e));
    }
  }

  split_dataset(manifest, spec.seed);
  return manifest;
}

}  // namespace senh
