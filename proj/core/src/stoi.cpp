#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "senh/metrics.hpp"

namespace senh {

namespace {

constexpr int64_t kStoiRate = 10000;
constexpr int kFrame = 256;
constexpr int kHop = 128;
constexpr int kFft = 512;
constexpr int kBands = 15;
constexpr double kMinBandFreq = 150.0;
constexpr int kSegFrames = 30;           // 384 ms analysis window
constexpr double kSilenceRangeDb = 40.0;
constexpr double kSdrClipDb = -15.0;
constexpr double kEps = 2.220446049250313e-16;

// In-place iterative radix-2 FFT; n must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// One-third-octave band matrix: bins k*fs/nfft assigned to [cf*2^-1/6, cf*2^1/6)
// with edges snapped to the nearest bin.
std::vector<std::vector<int>> third_octave_bins() {
  std::vector<std::vector<int>> bands(kBands);
  const int half = kFft / 2 + 1;
  std::vector<double> f(half);
  for (int k = 0; k < half; ++k)
    f[k] = static_cast<double>(k) * kStoiRate / kFft;
  for (int j = 0; j < kBands; ++j) {
    const double f_low = kMinBandFreq * std::pow(2.0, (2.0 * j - 1.0) / 6.0);
    const double f_high = kMinBandFreq * std::pow(2.0, (2.0 * j + 1.0) / 6.0);
    int lo = 0, hi = 0;
    double best_lo = 1e18, best_hi = 1e18;
    for (int k = 0; k < half; ++k) {
      const double dl = (f[k] - f_low) * (f[k] - f_low);
      const double dh = (f[k] - f_high) * (f[k] - f_high);
      if (dl < best_lo) { best_lo = dl; lo = k; }
      if (dh < best_hi) { best_hi = dh; hi = k; }
    }
    for (int k = lo; k < hi; ++k) bands[j].push_back(k);
  }
  return bands;
}

std::vector<std::vector<double>> frame_signal(const std::vector<double>& x,
                                              const std::vector<double>& window) {
  std::vector<std::vector<double>> frames;
  if (x.size() < kFrame) return frames;
  for (size_t start = 0; start + kFrame <= x.size(); start += kHop) {
    std::vector<double> fr(kFrame);
    for (int i = 0; i < kFrame; ++i) fr[i] = x[start + i] * window[i];
    frames.push_back(std::move(fr));
  }
  return frames;
}

// Band envelope matrix (kBands x n_frames).
std::vector<std::vector<double>> band_envelopes(
    const std::vector<std::vector<double>>& frames,
    const std::vector<std::vector<int>>& bands) {
  std::vector<std::vector<double>> env(kBands,
                                       std::vector<double>(frames.size(), 0.0));
  std::vector<std::complex<double>> buf(kFft);
  for (size_t m = 0; m < frames.size(); ++m) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < kFrame; ++i) buf[i] = frames[m][i];
    fft(buf);
    for (int j = 0; j < kBands; ++j) {
      double acc = 0.0;
      for (int k : bands[j]) acc += std::norm(buf[k]);
      env[j][m] = std::sqrt(acc);
    }
  }
  return env;
}

double correlation(const double* x, const double* y, int n) {
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / (std::sqrt(sxx) * std::sqrt(syy) + kEps);
}

}  // namespace

double stoi_score(const AudioBuffer& clean, const AudioBuffer& test) {
  if (clean.samples.size() != test.samples.size())
    throw Error(ErrorCategory::data, "stoi: length mismatch");
  if (clean.sample_rate != test.sample_rate)
    throw Error(ErrorCategory::data, "stoi: sample-rate mismatch");

  const AudioBuffer c10 =
      clean.sample_rate == kStoiRate ? clean : resample(clean, kStoiRate);
  const AudioBuffer t10 =
      test.sample_rate == kStoiRate ? test : resample(test, kStoiRate);

  // MATLAB-style Hann (no zero endpoints)
  std::vector<double> window(kFrame);
  for (int i = 0; i < kFrame; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * (i + 1) / (kFrame + 1)));

  auto cframes = frame_signal(c10.samples, window);
  auto tframes = frame_signal(t10.samples, window);
  const size_t n_frames = std::min(cframes.size(), tframes.size());
  cframes.resize(n_frames);
  tframes.resize(n_frames);

  // Drop frames more than kSilenceRangeDb below the loudest clean frame.
  std::vector<double> energy_db(n_frames);
  double max_db = -1e30;
  for (size_t m = 0; m < n_frames; ++m) {
    double e = 0.0;
    for (double v : cframes[m]) e += v * v;
    energy_db[m] = 20.0 * std::log10(std::sqrt(e) + kEps);
    max_db = std::max(max_db, energy_db[m]);
  }
  std::vector<std::vector<double>> ckeep, tkeep;
  for (size_t m = 0; m < n_frames; ++m) {
    if (energy_db[m] > max_db - kSilenceRangeDb) {
      ckeep.push_back(std::move(cframes[m]));
      tkeep.push_back(std::move(tframes[m]));
    }
  }
  if (ckeep.size() < static_cast<size_t>(kSegFrames))
    throw Error(ErrorCategory::data,
                "stoi: too short after silence removal (" +
                    std::to_string(ckeep.size()) + " frames, need " +
                    std::to_string(kSegFrames) + ")");

  static const std::vector<std::vector<int>> bands = third_octave_bins();
  const auto cx = band_envelopes(ckeep, bands);
  const auto ty = band_envelopes(tkeep, bands);
  const size_t m_total = ckeep.size();

  const double clip_factor = 1.0 + std::pow(10.0, -kSdrClipDb / 20.0);
  double acc = 0.0;
  int64_t count = 0;
  std::array<double, kSegFrames> xseg{}, yseg{};
  for (size_t m = kSegFrames; m <= m_total; ++m) {
    for (int j = 0; j < kBands; ++j) {
      double nx = 0.0, ny = 0.0;
      for (int i = 0; i < kSegFrames; ++i) {
        xseg[i] = cx[j][m - kSegFrames + i];
        yseg[i] = ty[j][m - kSegFrames + i];
        nx += xseg[i] * xseg[i];
        ny += yseg[i] * yseg[i];
      }
      const double alpha = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      for (int i = 0; i < kSegFrames; ++i) {
        const double clipped = std::min(alpha * yseg[i], clip_factor * xseg[i]);
        yseg[i] = clipped;
      }
      acc += correlation(xseg.data(), yseg.data(), kSegFrames);
      ++count;
    }
  }
  const double score = acc / static_cast<double>(count);
  return std::clamp(score, 0.0, 1.0);
}

}  // namespace senh
