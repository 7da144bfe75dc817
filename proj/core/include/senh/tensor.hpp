#ifndef SENH_TENSOR_HPP
#define SENH_TENSOR_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "senh/error.hpp"

namespace senh {

// Batched 1-D feature map laid out row-major as (batch, channel, position).
// The same container holds convolution weights, read as (dim0, dim1, taps).
template <class Real>
struct Tensor3 {
  int64_t batch = 0;
  int64_t channels = 0;
  int64_t length = 0;
  std::vector<Real> v;

  // Zero-sized dims are allowed only so concat with a 0-channel tensor is a
  // representable identity; every network op validates dims >= 1 itself.
  Tensor3() = default;
  Tensor3(int64_t b, int64_t c, int64_t l, Real fill = Real(0))
      : batch(b), channels(c), length(l) {
    if (b < 0 || c < 0 || l < 0)
      throw Error(ErrorCategory::shape, "tensor dims must be non-negative");
    v.assign(static_cast<size_t>(b * c * l), fill);
  }

  int64_t size() const { return batch * channels * length; }

  Real* row(int64_t b, int64_t c) { return v.data() + (b * channels + c) * length; }
  const Real* row(int64_t b, int64_t c) const {
    return v.data() + (b * channels + c) * length;
  }

  Real& at(int64_t b, int64_t c, int64_t x) { return row(b, c)[x]; }
  Real at(int64_t b, int64_t c, int64_t x) const { return row(b, c)[x]; }

  bool same_shape(const Tensor3& o) const {
    return batch == o.batch && channels == o.channels && length == o.length;
  }

  void zero() { std::fill(v.begin(), v.end(), Real(0)); }

  bool all_finite() const {
    for (Real x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  template <class Other>
  Tensor3<Other> cast() const {
    Tensor3<Other> out(batch, channels, length);
    for (int64_t i = 0; i < size(); ++i) out.v[i] = static_cast<Other>(v[i]);
    return out;
  }
};

using TensorF = Tensor3<float>;
using TensorD = Tensor3<double>;

// Conv geometry; effective tap span is dilation*(taps-1)+1.
struct ConvGeom {
  int64_t stride = 1;
  int64_t dilation = 1;
  int64_t pad_left = 0;
  int64_t pad_right = 0;
};

// Weights plus bias for conv1d (weights read as (c_out, c_in, f)) or for
// transposed_conv1d (weights read as (c_in, c_out, f)); bias always sized to
// the op's output channel count.
template <class Real>
struct ConvParams {
  Tensor3<Real> weights;
  Tensor3<Real> bias;
  ConvGeom geom;
};

inline int64_t conv_output_length(int64_t len, int64_t taps, const ConvGeom& g) {
  const int64_t padded = len + g.pad_left + g.pad_right;
  const int64_t span = g.dilation * (taps - 1) + 1;
  if (padded < span) return 0;
  return (padded - span) / g.stride + 1;
}

inline int64_t transposed_output_length(int64_t len, int64_t taps, const ConvGeom& g) {
  return (len - 1) * g.stride + g.dilation * (taps - 1) + 1 - g.pad_left - g.pad_right;
}

// Seeded uniform fill in [-bound, bound].
template <class Real>
void fill_uniform(Tensor3<Real>& t, Real bound, std::mt19937& rng) {
  std::uniform_real_distribution<Real> dist(-bound, bound);
  for (auto& x : t.v) x = dist(rng);
}

}  // namespace senh

#endif  // SENH_TENSOR_HPP
