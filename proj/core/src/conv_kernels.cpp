#include "senh/conv_kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace senh {
namespace kernels {

namespace {

// Copies one (b, c) row into a zero-padded scratch row so the tap loops never
// need boundary clipping. Scratch layout: [pad_left | data | pad_right+slack].
template <class Real>
void pad_row(const Real* src, int64_t len, int64_t pad_left, Real* dst,
             int64_t padded_len) {
  std::fill(dst, dst + padded_len, Real(0));
  std::copy(src, src + len, dst + pad_left);
}

template <class Real>
void check_conv_args(const Tensor3<Real>& in, const Tensor3<Real>& w,
                     const Tensor3<Real>& bias, const ConvGeom& g, bool transposed) {
  if (g.stride < 1 || g.dilation < 1 || g.pad_left < 0 || g.pad_right < 0)
    throw Error(ErrorCategory::shape, "conv geometry must have s,d >= 1 and pads >= 0");
  const int64_t c_in = transposed ? w.batch : w.channels;
  const int64_t c_out = transposed ? w.channels : w.batch;
  if (in.channels != c_in)
    throw Error(ErrorCategory::shape,
                "channel mismatch: input has " + std::to_string(in.channels) +
                    ", weights expect " + std::to_string(c_in));
  if (bias.size() != c_out)
    throw Error(ErrorCategory::shape, "bias size must equal output channel count");
}

}  // namespace

template <class Real>
Real fixed_order_sum(const Real* p, int64_t n) {
  Real a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0;
  int64_t x = 0;
  for (; x + 8 <= n; x += 8) {
    a0 += p[x + 0];
    a1 += p[x + 1];
    a2 += p[x + 2];
    a3 += p[x + 3];
    a4 += p[x + 4];
    a5 += p[x + 5];
    a6 += p[x + 6];
    a7 += p[x + 7];
  }
  Real tail = 0;
  for (; x < n; ++x) tail += p[x];
  return ((a0 + a1) + (a2 + a3)) + ((a4 + a5) + (a6 + a7)) + tail;
}

template <class Real>
Real fixed_order_dot(const Real* p, const Real* q, int64_t n) {
  Real a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0;
  int64_t x = 0;
  for (; x + 8 <= n; x += 8) {
    a0 += p[x + 0] * q[x + 0];
    a1 += p[x + 1] * q[x + 1];
    a2 += p[x + 2] * q[x + 2];
    a3 += p[x + 3] * q[x + 3];
    a4 += p[x + 4] * q[x + 4];
    a5 += p[x + 5] * q[x + 5];
    a6 += p[x + 6] * q[x + 6];
    a7 += p[x + 7] * q[x + 7];
  }
  Real tail = 0;
  for (; x < n; ++x) tail += p[x] * q[x];
  return ((a0 + a1) + (a2 + a3)) + ((a4 + a5) + (a6 + a7)) + tail;
}

// Inner accumulation y[x] += sum_j w[j] * src[x*s + off_j]; taps blocked by 4
// to amortize the load/store of the accumulator row. The per-element adds are
// written as a sequential chain so the summation order matches a naive
// tap-by-tap loop bit for bit.
template <class Real>
void accumulate_taps(Real* acc, int64_t n_out, const Real* src, const Real* w,
                     int64_t taps, int64_t stride, int64_t dilation) {
  int64_t k = 0;
  if (stride == 1) {
    for (; k + 4 <= taps; k += 4) {
      const Real w0 = w[k], w1 = w[k + 1], w2 = w[k + 2], w3 = w[k + 3];
      const Real* s0 = src + k * dilation;
      const Real* s1 = s0 + dilation;
      const Real* s2 = s1 + dilation;
      const Real* s3 = s2 + dilation;
      for (int64_t x = 0; x < n_out; ++x) {
        Real a = acc[x];
        a += w0 * s0[x];
        a += w1 * s1[x];
        a += w2 * s2[x];
        a += w3 * s3[x];
        acc[x] = a;
      }
    }
    for (; k < taps; ++k) {
      const Real wk = w[k];
      const Real* s0 = src + k * dilation;
      for (int64_t x = 0; x < n_out; ++x) acc[x] += wk * s0[x];
    }
  } else {
    for (; k < taps; ++k) {
      const Real wk = w[k];
      const Real* s0 = src + k * dilation;
      for (int64_t x = 0; x < n_out; ++x) acc[x] += wk * s0[x * stride];
    }
  }
}

template <class Real>
void conv1d_forward(const Tensor3<Real>& in, const Tensor3<Real>& w,
                    const Tensor3<Real>& bias, const ConvGeom& g, Tensor3<Real>& out) {
  check_conv_args(in, w, bias, g, /*transposed=*/false);
  const int64_t c_out = w.batch, c_in = w.channels, taps = w.length;
  const int64_t n_out = conv_output_length(in.length, taps, g);
  if (n_out < 1)
    throw Error(ErrorCategory::shape,
                "padded input shorter than one filter span (len=" +
                    std::to_string(in.length) + ", span=" +
                    std::to_string(g.dilation * (taps - 1) + 1) + ")");
  out = Tensor3<Real>(in.batch, c_out, n_out);

  const int64_t padded_len = in.length + g.pad_left + g.pad_right;
  Tensor3<Real> padded(in.batch, c_in, padded_len);
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < in.batch; ++b)
    for (int64_t c = 0; c < c_in; ++c)
      pad_row(in.row(b, c), in.length, g.pad_left, padded.row(b, c), padded_len);

#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < in.batch; ++b) {
    for (int64_t co = 0; co < c_out; ++co) {
      Real* acc = out.row(b, co);
      std::fill(acc, acc + n_out, bias.v[co]);
      for (int64_t ci = 0; ci < c_in; ++ci)
        accumulate_taps(acc, n_out, padded.row(b, ci), w.row(co, ci), taps,
                        g.stride, g.dilation);
    }
  }
}

template <class Real>
void conv1d_backward_input(const Tensor3<Real>& w, const ConvGeom& g,
                           const Tensor3<Real>& gout, Tensor3<Real>& gin) {
  const int64_t c_out = w.batch, c_in = w.channels, taps = w.length;
  const int64_t n_out = gout.length;

  if (g.stride == 1) {
    // Gather form: gin[p] += w[k] * gout[p + padL - k*d]. Padding the gout row
    // by span on both sides removes all boundary cases.
    const int64_t span = g.dilation * (taps - 1);
    const int64_t gpad_len = n_out + 2 * span;
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t b = 0; b < gin.batch; ++b) {
      for (int64_t ci = 0; ci < c_in; ++ci) {
        std::vector<Real> gpad(static_cast<size_t>(gpad_len), Real(0));
        Real* acc = gin.row(b, ci);
        for (int64_t co = 0; co < c_out; ++co) {
          const Real* grow = gout.row(b, co);
          std::copy(grow, grow + n_out, gpad.begin() + span);
          const Real* wr = w.row(co, ci);
          // reversed taps: offset p + padL - k*d, shifted by +span into gpad
          int64_t k = 0;
          for (; k + 4 <= taps; k += 4) {
            const Real w0 = wr[k], w1 = wr[k + 1], w2 = wr[k + 2], w3 = wr[k + 3];
            const Real* s0 = gpad.data() + span + g.pad_left - k * g.dilation;
            const Real* s1 = s0 - g.dilation;
            const Real* s2 = s1 - g.dilation;
            const Real* s3 = s2 - g.dilation;
            for (int64_t p = 0; p < gin.length; ++p)
              acc[p] += w0 * s0[p] + w1 * s1[p] + w2 * s2[p] + w3 * s3[p];
          }
          for (; k < taps; ++k) {
            const Real wk = wr[k];
            const Real* s0 = gpad.data() + span + g.pad_left - k * g.dilation;
            for (int64_t p = 0; p < gin.length; ++p) acc[p] += wk * s0[p];
          }
        }
      }
    }
  } else {
    // Strided scatter; each (b, ci) row is owned by one thread.
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t b = 0; b < gin.batch; ++b) {
      for (int64_t ci = 0; ci < c_in; ++ci) {
        Real* acc = gin.row(b, ci);
        for (int64_t co = 0; co < c_out; ++co) {
          const Real* grow = gout.row(b, co);
          const Real* wr = w.row(co, ci);
          for (int64_t k = 0; k < taps; ++k) {
            const Real wk = wr[k];
            const int64_t off = k * g.dilation - g.pad_left;
            for (int64_t x = 0; x < n_out; ++x) {
              const int64_t p = x * g.stride + off;
              if (p >= 0 && p < gin.length) acc[p] += wk * grow[x];
            }
          }
        }
      }
    }
  }
}

template <class Real>
void conv1d_backward_params(const Tensor3<Real>& in, const ConvGeom& g,
                            const Tensor3<Real>& gout, Tensor3<Real>& gw,
                            Tensor3<Real>& gbias) {
  const int64_t c_out = gw.batch, c_in = gw.channels, taps = gw.length;
  const int64_t n_out = gout.length;
  const int64_t padded_len = in.length + g.pad_left + g.pad_right;
  Tensor3<Real> padded(in.batch, c_in, padded_len);
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < in.batch; ++b)
    for (int64_t c = 0; c < c_in; ++c)
      pad_row(in.row(b, c), in.length, g.pad_left, padded.row(b, c), padded_len);

#pragma omp parallel for schedule(static)
  for (int64_t co = 0; co < c_out; ++co) {
    Real gb = 0;
    for (int64_t b = 0; b < in.batch; ++b)
      gb += fixed_order_sum(gout.row(b, co), n_out);
    gbias.v[co] += gb;
    for (int64_t ci = 0; ci < c_in; ++ci) {
      Real* gwr = gw.row(co, ci);
      for (int64_t k = 0; k < taps; ++k) {
        Real acc = 0;
        for (int64_t b = 0; b < in.batch; ++b) {
          const Real* grow = gout.row(b, co);
          const Real* xin = padded.row(b, ci) + k * g.dilation;
          if (g.stride == 1) {
            acc += fixed_order_dot(grow, xin, n_out);
          } else {
            Real s = 0;
            for (int64_t x = 0; x < n_out; ++x) s += grow[x] * xin[x * g.stride];
            acc += s;
          }
        }
        gwr[k] += acc;
      }
    }
  }
}

template <class Real>
void transposed_conv1d_forward(const Tensor3<Real>& in, const Tensor3<Real>& w,
                               const Tensor3<Real>& bias, const ConvGeom& g,
                               Tensor3<Real>& out) {
  check_conv_args(in, w, bias, g, /*transposed=*/true);
  const int64_t c_in = w.batch, c_out = w.channels, taps = w.length;
  const int64_t n_out = transposed_output_length(in.length, taps, g);
  if (n_out < 1)
    throw Error(ErrorCategory::shape, "transposed conv output would be empty");
  out = Tensor3<Real>(in.batch, c_out, n_out);

  // Scatter with a padded scratch row per (b, co); pads absorb the clipped
  // positions so no bounds checks are needed in the tap loop.
  const int64_t span = g.dilation * (taps - 1);
  const int64_t scratch_len = n_out + g.pad_left + g.pad_right + span + 1;
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < in.batch; ++b) {
    for (int64_t co = 0; co < c_out; ++co) {
      std::vector<Real> scratch(static_cast<size_t>(scratch_len), Real(0));
      for (int64_t ci = 0; ci < c_in; ++ci) {
        const Real* xin = in.row(b, ci);
        const Real* wr = w.row(ci, co);
        for (int64_t k = 0; k < taps; ++k) {
          const Real wk = wr[k];
          Real* dst = scratch.data() + k * g.dilation;
          if (g.stride == 1) {
            for (int64_t x = 0; x < in.length; ++x) dst[x] += wk * xin[x];
          } else {
            for (int64_t x = 0; x < in.length; ++x) dst[x * g.stride] += wk * xin[x];
          }
        }
      }
      Real* orow = out.row(b, co);
      const Real* src = scratch.data() + g.pad_left;
      const Real bv = bias.v[co];
      for (int64_t x = 0; x < n_out; ++x) orow[x] = src[x] + bv;
    }
  }
}

template <class Real>
void transposed_conv1d_backward_input(const Tensor3<Real>& w, const ConvGeom& g,
                                      const Tensor3<Real>& gout, Tensor3<Real>& gin) {
  // The adjoint of the transposed conv is the plain conv direction:
  // gin(b, ci, x) += sum_{co,k} w(ci, co, k) * gout(b, co, x*s + k*d - padL)
  const int64_t c_in = w.batch, c_out = w.channels, taps = w.length;
  const int64_t padded_len = gout.length + g.pad_left + g.pad_right;
  Tensor3<Real> padded(gout.batch, c_out, padded_len);
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < gout.batch; ++b)
    for (int64_t c = 0; c < c_out; ++c)
      pad_row(gout.row(b, c), gout.length, g.pad_left, padded.row(b, c), padded_len);

#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < gin.batch; ++b) {
    for (int64_t ci = 0; ci < c_in; ++ci) {
      Real* acc = gin.row(b, ci);
      for (int64_t co = 0; co < c_out; ++co)
        accumulate_taps(acc, gin.length, padded.row(b, co), w.row(ci, co), taps,
                        g.stride, g.dilation);
    }
  }
}

template <class Real>
void transposed_conv1d_backward_params(const Tensor3<Real>& in, const ConvGeom& g,
                                       const Tensor3<Real>& gout, Tensor3<Real>& gw,
                                       Tensor3<Real>& gbias) {
  // gw(ci, co, k) += sum_{b,x} in(b, ci, x) * gout(b, co, x*s + k*d - padL)
  const int64_t c_in = gw.batch, c_out = gw.channels, taps = gw.length;
  const int64_t padded_len = gout.length + g.pad_left + g.pad_right;
  Tensor3<Real> padded(gout.batch, c_out, padded_len);
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t b = 0; b < gout.batch; ++b)
    for (int64_t c = 0; c < c_out; ++c)
      pad_row(gout.row(b, c), gout.length, g.pad_left, padded.row(b, c), padded_len);

#pragma omp parallel for schedule(static)
  for (int64_t co = 0; co < c_out; ++co) {
    Real gb = 0;
    for (int64_t b = 0; b < gout.batch; ++b)
      gb += fixed_order_sum(gout.row(b, co), gout.length);
    gbias.v[co] += gb;
    for (int64_t ci = 0; ci < c_in; ++ci) {
      for (int64_t k = 0; k < taps; ++k) {
        Real acc = 0;
        for (int64_t b = 0; b < in.batch; ++b) {
          const Real* xin = in.row(b, ci);
          const Real* grow = padded.row(b, co) + k * g.dilation;
          if (g.stride == 1) {
            acc += fixed_order_dot(xin, grow, in.length);
          } else {
            Real s = 0;
            for (int64_t x = 0; x < in.length; ++x) s += xin[x] * grow[x * g.stride];
            acc += s;
          }
        }
        gw.row(ci, co)[k] += acc;
      }
    }
  }
}

#define SENH_INSTANTIATE_KERNELS(Real)                                               \
  template Real fixed_order_sum<Real>(const Real*, int64_t);                         \
  template Real fixed_order_dot<Real>(const Real*, const Real*, int64_t);            \
  template void conv1d_forward<Real>(const Tensor3<Real>&, const Tensor3<Real>&,     \
                                     const Tensor3<Real>&, const ConvGeom&,          \
                                     Tensor3<Real>&);                                \
  template void conv1d_backward_input<Real>(const Tensor3<Real>&, const ConvGeom&,   \
                                            const Tensor3<Real>&, Tensor3<Real>&);   \
  template void conv1d_backward_params<Real>(const Tensor3<Real>&, const ConvGeom&,  \
                                             const Tensor3<Real>&, Tensor3<Real>&,   \
                                             Tensor3<Real>&);                        \
  template void transposed_conv1d_forward<Real>(                                     \
      const Tensor3<Real>&, const Tensor3<Real>&, const Tensor3<Real>&,              \
      const ConvGeom&, Tensor3<Real>&);                                              \
  template void transposed_conv1d_backward_input<Real>(                              \
      const Tensor3<Real>&, const ConvGeom&, const Tensor3<Real>&, Tensor3<Real>&);  \
  template void transposed_conv1d_backward_params<Real>(                             \
      const Tensor3<Real>&, const ConvGeom&, const Tensor3<Real>&, Tensor3<Real>&,   \
      Tensor3<Real>&);

SENH_INSTANTIATE_KERNELS(float)
SENH_INSTANTIATE_KERNELS(double)

#undef SENH_INSTANTIATE_KERNELS

}  // namespace kernels
}  // namespace senh
