#ifndef SENH_AUDIO_HPP
#define SENH_AUDIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "senh/error.hpp"

namespace senh {

// Mono waveform; samples nominally in [-1, 1] after decode.
struct AudioBuffer {
  int64_t sample_rate = 0;
  std::vector<double> samples;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// RIFF/WAVE PCM reader, 16- or 24-bit mono only. Integer samples map to
// [-1, 1) by division with 2^(bits-1). Stereo or other codecs are errors, not
// silent downmixes.
AudioBuffer load_wav(const std::string& path);

// 16-bit PCM writer; values are clamped to [-1, 1] and rounded to the nearest
// step, so read(write(x)) matches x within one quantization step (2^-15).
void write_wav(const std::string& path, const AudioBuffer& buffer);

// Band-limited rate conversion with a Kaiser-windowed sinc, 64 taps per
// output sample, cutoff at 0.9x the Nyquist of the lower rate. Same-rate
// input is returned unchanged. Output length = round(L * target / source).
AudioBuffer resample(const AudioBuffer& buffer, int64_t target_rate);

}  // namespace senh

#endif  // SENH_AUDIO_HPP
