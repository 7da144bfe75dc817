#ifndef SENH_CONV_KERNELS_HPP
#define SENH_CONV_KERNELS_HPP

#include "senh/tensor.hpp"

namespace senh {
namespace kernels {

// Dense 1-D convolution kernels shared by the autodiff ops. All of them are
// deterministic: every output row is produced by exactly one thread with a
// fixed sequential reduction order, so results are bit-identical across runs
// and thread counts.

// out(b, co, x) = bias(co) + sum_{ci,k} w(co, ci, k) * in(b, ci, x*s + k*d - padL)
template <class Real>
void conv1d_forward(const Tensor3<Real>& in, const Tensor3<Real>& w,
                    const Tensor3<Real>& bias, const ConvGeom& g, Tensor3<Real>& out);

// gin += adjoint of conv1d_forward w.r.t. its input.
template <class Real>
void conv1d_backward_input(const Tensor3<Real>& w, const ConvGeom& g,
                           const Tensor3<Real>& gout, Tensor3<Real>& gin);

// gw, gbias += adjoint w.r.t. weights and bias.
template <class Real>
void conv1d_backward_params(const Tensor3<Real>& in, const ConvGeom& g,
                            const Tensor3<Real>& gout, Tensor3<Real>& gw,
                            Tensor3<Real>& gbias);

// out(b, co, x*s + k*d - padL) += w(ci, co, k) * in(b, ci, x); out init to bias.
// Exact adjoint of conv1d_forward when the same weight array is read with
// (dim0, dim1) swapped.
template <class Real>
void transposed_conv1d_forward(const Tensor3<Real>& in, const Tensor3<Real>& w,
                               const Tensor3<Real>& bias, const ConvGeom& g,
                               Tensor3<Real>& out);

template <class Real>
void transposed_conv1d_backward_input(const Tensor3<Real>& w, const ConvGeom& g,
                                      const Tensor3<Real>& gout, Tensor3<Real>& gin);

template <class Real>
void transposed_conv1d_backward_params(const Tensor3<Real>& in, const ConvGeom& g,
                                       const Tensor3<Real>& gout, Tensor3<Real>& gw,
                                       Tensor3<Real>& gbias);

// Deterministic sum with a fixed 8-lane accumulation order (vectorizable
// without -ffast-math).
template <class Real>
Real fixed_order_sum(const Real* p, int64_t n);

template <class Real>
Real fixed_order_dot(const Real* p, const Real* q, int64_t n);

}  // namespace kernels
}  // namespace senh

#endif  // SENH_CONV_KERNELS_HPP
