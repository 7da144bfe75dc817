#include "senh/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace senh {

namespace {

uint32_t read_u32(std::istream& s) {
  unsigned char b[4];
  s.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}

uint16_t read_u16(std::istream& s) {
  unsigned char b[2];
  s.read(reinterpret_cast<char*>(b), 2);
  return uint16_t(b[0]) | uint16_t(b[1]) << 8;
}

void write_u32(std::ostream& s, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  s.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& s, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  s.write(reinterpret_cast<char*>(b), 2);
}

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double half_sq = 0.25 * x * x;
  for (int k = 1; k < 64; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-14 * sum) break;
  }
  return sum;
}

}  // namespace

AudioBuffer load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCategory::io, "cannot open " + path);

  char tag[4];
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "RIFF", 4) != 0)
    throw Error(ErrorCategory::format, path + ": not a RIFF file");
  read_u32(f);  // riff size
  f.read(tag, 4);
  if (!f || std::memcmp(tag, "WAVE", 4) != 0)
    throw Error(ErrorCategory::format, path + ": not a WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  AudioBuffer out;

  while (f.read(tag, 4)) {
    const uint32_t chunk_size = read_u32(f);
    if (!f) break;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16)
        throw Error(ErrorCategory::format, path + ": truncated fmt chunk");
      format = read_u16(f);
      channels = read_u16(f);
      rate = read_u32(f);
      read_u32(f);  // byte rate
      read_u16(f);  // block align
      bits = read_u16(f);
      f.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt)
        throw Error(ErrorCategory::format, path + ": data chunk before fmt");
      if (format != 1)
        throw Error(ErrorCategory::format,
                    path + ": unsupported codec (only PCM is handled)");
      if (channels != 1)
        throw Error(ErrorCategory::format,
                    path + ": expected mono, got " + std::to_string(channels) +
                        " channels (no silent downmix)");
      if (bits != 16 && bits != 24)
        throw Error(ErrorCategory::format,
                    path + ": unsupported bit depth " + std::to_string(bits));
      const int64_t bytes_per = bits / 8;
      const int64_t n = chunk_size / bytes_per;
      std::vector<char> raw(chunk_size);
      f.read(raw.data(), chunk_size);
      if (f.gcount() != static_cast<std::streamsize>(chunk_size))
        throw Error(ErrorCategory::format, path + ": truncated data chunk");
      out.sample_rate = rate;
      out.samples.resize(n);
      const double denom = static_cast<double>(int64_t(1) << (bits - 1));
      const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data());
      for (int64_t i = 0; i < n; ++i, p += bytes_per) {
        int32_t v;
        if (bits == 16) {
          v = static_cast<int16_t>(uint16_t(p[0]) | uint16_t(p[1]) << 8);
        } else {
          v = int32_t(uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16);
          if (v & 0x800000) v -= 0x1000000;  // sign-extend 24-bit
        }
        out.samples[i] = static_cast<double>(v) / denom;
      }
      return out;
    } else {
      // skip unknown chunk (padded to even size)
      f.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  throw Error(ErrorCategory::format, path + ": no data chunk found");
}

void write_wav(const std::string& path, const AudioBuffer& buffer) {
  if (buffer.sample_rate <= 0)
    throw Error(ErrorCategory::data, "write_wav: sample rate must be > 0");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCategory::io, "cannot create " + path);

  const uint32_t n = static_cast<uint32_t>(buffer.samples.size());
  const uint32_t data_bytes = n * 2;
  f.write("RIFF", 4);
  write_u32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_u32(f, 16);
  write_u16(f, 1);  // PCM
  write_u16(f, 1);  // mono
  write_u32(f, static_cast<uint32_t>(buffer.sample_rate));
  write_u32(f, static_cast<uint32_t>(buffer.sample_rate * 2));
  write_u16(f, 2);   // block align
  write_u16(f, 16);  // bits
  f.write("data", 4);
  write_u32(f, data_bytes);
  for (double x : buffer.samples) {
    const double clamped = std::clamp(x, -1.0, 1.0);
    const int32_t q = static_cast<int32_t>(std::lround(clamped * 32768.0));
    const int16_t s = static_cast<int16_t>(std::clamp(q, -32768, 32767));
    write_u16(f, static_cast<uint16_t>(s));
  }
  if (!f) throw Error(ErrorCategory::io, "short write to " + path);
}

AudioBuffer resample(const AudioBuffer& buffer, int64_t target_rate) {
  if (buffer.sample_rate <= 0 || target_rate <= 0)
    throw Error(ErrorCategory::data, "resample: rates must be > 0");
  if (buffer.sample_rate == target_rate) return buffer;

  const double src_rate = static_cast<double>(buffer.sample_rate);
  const double ratio = src_rate / static_cast<double>(target_rate);
  const int64_t n_in = static_cast<int64_t>(buffer.samples.size());
  const int64_t n_out =
      std::llround(static_cast<double>(n_in) * target_rate / src_rate);

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.assign(n_out, 0.0);
  if (n_in == 0) return out;

  // Cutoff at 0.9x Nyquist of the lower rate, in cycles per source sample.
  const double cutoff =
      0.45 * std::min(src_rate, static_cast<double>(target_rate)) / src_rate;
  constexpr int kTaps = 64;
  constexpr int kHalf = kTaps / 2;
  constexpr double kBeta = 8.6;
  const double i0_beta = bessel_i0(kBeta);

  for (int64_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) * ratio;
    const int64_t m0 = static_cast<int64_t>(std::floor(t)) - (kHalf - 1);
    double acc = 0.0, wsum = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const int64_t m = m0 + j;
      const double dt = static_cast<double>(m) - t;
      const double r = dt / kHalf;
      if (r <= -1.0 || r >= 1.0) continue;
      const double window = bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      const double arg = 2.0 * cutoff * dt;
      const double sinc =
          arg == 0.0 ? 1.0 : std::sin(M_PI * arg) / (M_PI * arg);
      const double h = 2.0 * cutoff * sinc * window;
      wsum += h;
      if (m >= 0 && m < n_in) acc += h * buffer.samples[m];
    }
    out.samples[n] = wsum > 0.0 ? acc / wsum : 0.0;
  }
  return out;
}

}  // namespace senh
