#ifndef SENH_PIPELINE_HPP
#define SENH_PIPELINE_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "senh/audio.hpp"

namespace senh {

// Affine [0,1] mapping y = x/scale + offset with exact inversion.
struct NormMeta {
  double scale = 1.0;
  double offset = 0.5;
};

// Peak normalization y = x/(2*max|x|) + 0.5, so y in [0,1] and 0 maps to 0.5.
// All-zero input passes through with identity meta (scale 1).
NormMeta normalize(std::vector<double>& samples);
void denormalize(std::vector<double>& samples, const NormMeta& meta);
std::vector<double> normalized_copy(const std::vector<double>& samples,
                                    const NormMeta& meta);

// Aligned clean/noisy 1 s training clips sharing offset and normalization.
struct ClipPair {
  std::vector<double> clean;   // clip_len samples, zero-padded past valid_len
  std::vector<double> noisy;
  std::string source_id;
  int64_t start = 0;           // offset into the source utterance, samples
  int64_t valid_len = 0;       // real samples; the rest is padding
  NormMeta meta;
};

// Cuts aligned buffers into clip_len windows every hop samples. Full windows
// are always kept; one trailing window is kept (zero-padded, valid_len
// recorded) when it reaches past the covered material and holds at least
// clip_len/2 real samples; shorter tails are discarded.
std::vector<ClipPair> segment(const std::vector<double>& clean,
                              const std::vector<double>& noisy, int64_t clip_len,
                              int64_t hop, const std::string& source_id,
                              const NormMeta& meta);

// Closed-form clip count for the rule above.
int64_t segment_clip_count(int64_t length, int64_t clip_len, int64_t hop);

// noisy = clean + alpha*noise with alpha chosen so the mix hits the target
// SNR exactly; noise shorter than clean is tiled from a seeded offset.
std::vector<double> mix_at_snr(const std::vector<double>& clean,
                               const std::vector<double>& noise,
                               double target_snr_db, std::mt19937& rng);

double signal_power(const std::vector<double>& x);

enum class Split { train, val, test };
const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string clean_path;
  std::string noisy_path;
  Split split = Split::train;
  std::string noise_kind;
  double snr_db = 0.0;
};

struct DatasetManifest {
  uint32_t seed = 0;
  int64_t sample_rate = 16000;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> of_split(Split s) const;
};

// Tab-separated manifest with a documented header line.
void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// Deterministic 8:1:1 split: shuffle under seed, floor(0.8n) train,
// floor(0.1n) val, remainder test. Requires at least 10 entries.
void split_dataset(DatasetManifest& manifest, uint32_t seed);

enum class NoiseKind { white, pink, babble };
const char* to_string(NoiseKind k);

struct SynthSpec {
  int64_t utterances = 20;
  std::vector<double> snr_levels_db = {15.0, 10.0, 5.0, 0.0};
  std::vector<NoiseKind> noise_kinds = {NoiseKind::white, NoiseKind::pink,
                                        NoiseKind::babble};
  int64_t sample_rate = 16000;
  double min_seconds = 2.0;
  double max_seconds = 3.0;
  uint32_t seed = 1;
  std::string out_dir;
};

// Materializes a desk-scale corpus of seeded multi-tone/chirp/AM "speech"
// signals mixed with synthetic noise at the requested SNR grid; one WAV pair
// per (utterance, snr) and a split manifest on disk. Bit-identical per seed.
DatasetManifest synth_corpus(const SynthSpec& spec);

// Seeded clean-utterance and noise generators (exposed for tests).
std::vector<double> synth_utterance(int64_t n, int64_t rate, std::mt19937& rng);
std::vector<double> synth_noise(NoiseKind kind, int64_t n, int64_t rate,
                                std::mt19937& rng);

}  // namespace senh

#endif  // SENH_PIPELINE_HPP
