#include "senh/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "senh/conv_kernels.hpp"

namespace senh {

template <class Real>
typename Tape<Real>::Value Tape<Real>::push_owned(Tensor3<Real> owned_value) {
  nodes_.emplace_back();
  Node& n = nodes_.back();
  n.owned = std::move(owned_value);
  n.val = &n.owned;
  return Value{static_cast<int32_t>(nodes_.size() - 1)};
}

template <class Real>
typename Tape<Real>::Node& Tape<Real>::node(Value v) {
  if (v.detached() || v.id >= static_cast<int32_t>(nodes_.size()))
    throw Error(ErrorCategory::internal, "detached node handle");
  return nodes_[v.id];
}

template <class Real>
const typename Tape<Real>::Node& Tape<Real>::node(Value v) const {
  if (v.detached() || v.id >= static_cast<int32_t>(nodes_.size()))
    throw Error(ErrorCategory::internal, "detached node handle");
  return nodes_[v.id];
}

template <class Real>
const Tensor3<Real>& Tape<Real>::value(Value v) const {
  return *node(v).val;
}

template <class Real>
const Tensor3<Real>& Tape<Real>::grad(Value v) const {
  return node(v).grad;
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::input(const Tensor3<Real>* value,
                                             Tensor3<Real>* grad_sink) {
  if (!value) throw Error(ErrorCategory::internal, "null input tensor");
  if (grad_sink && !grad_sink->same_shape(*value))
    throw Error(ErrorCategory::shape, "grad sink shape differs from value");
  nodes_.emplace_back();
  Node& n = nodes_.back();
  n.val = value;
  n.sink = grad_sink;
  return Value{static_cast<int32_t>(nodes_.size() - 1)};
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::constant(Tensor3<Real> value) {
  return push_owned(std::move(value));
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::conv1d(Value x, Value w, Value bias,
                                              const ConvGeom& g) {
  Tensor3<Real> result;
  kernels::conv1d_forward(value(x), value(w), value(bias), g, result);
  Value out = push_owned(std::move(result));
  nodes_.back().back = [x, w, bias, g, out](Tape& t) {
    const Tensor3<Real>& go = t.grad_buf(out);
    kernels::conv1d_backward_input(t.value(w), g, go, t.grad_buf(x));
    kernels::conv1d_backward_params(t.value(x), g, go, t.grad_buf(w),
                                    t.grad_buf(bias));
  };
  return out;
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::transposed_conv1d(Value x, Value w, Value bias,
                                                         const ConvGeom& g) {
  Tensor3<Real> result;
  kernels::transposed_conv1d_forward(value(x), value(w), value(bias), g, result);
  Value out = push_owned(std::move(result));
  nodes_.back().back = [x, w, bias, g, out](Tape& t) {
    const Tensor3<Real>& go = t.grad_buf(out);
    kernels::transposed_conv1d_backward_input(t.value(w), g, go, t.grad_buf(x));
    kernels::transposed_conv1d_backward_params(t.value(x), g, go, t.grad_buf(w),
                                               t.grad_buf(bias));
  };
  return out;
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::maxpool1d(Value x, int64_t window,
                                                 int64_t stride) {
  const Tensor3<Real>& xin = value(x);
  if (window < 1 || stride < 1)
    throw Error(ErrorCategory::shape, "pool window and stride must be >= 1");
  if (xin.length < window)
    throw Error(ErrorCategory::shape, "input shorter than pool window");
  const int64_t n_out = (xin.length - window) / stride + 1;

  Tensor3<Real> result(xin.batch, xin.channels, n_out);
  // First maximum in each window wins; ties route their gradient there.
  auto argmax = std::make_shared<std::vector<int32_t>>(
      static_cast<size_t>(xin.batch * xin.channels * n_out));
  for (int64_t b = 0; b < xin.batch; ++b) {
    for (int64_t c = 0; c < xin.channels; ++c) {
      const Real* src = xin.row(b, c);
      Real* dst = result.row(b, c);
      int32_t* am = argmax->data() + (b * xin.channels + c) * n_out;
      for (int64_t xo = 0; xo < n_out; ++xo) {
        const int64_t base = xo * stride;
        Real best = src[base];
        int64_t best_j = 0;
        for (int64_t j = 1; j < window; ++j) {
          if (src[base + j] > best) {
            best = src[base + j];
            best_j = j;
          }
        }
        dst[xo] = best;
        am[xo] = static_cast<int32_t>(base + best_j);
      }
    }
  }
  Value out = push_owned(std::move(result));
  nodes_.back().back = [x, out, argmax, n_out](Tape& t) {
    const Tensor3<Real>& go = t.grad_buf(out);
    Tensor3<Real>& gi = t.grad_buf(x);
    for (int64_t b = 0; b < gi.batch; ++b) {
      for (int64_t c = 0; c < gi.channels; ++c) {
        const Real* grow = go.row(b, c);
        Real* girow = gi.row(b, c);
        const int32_t* am = argmax->data() + (b * gi.channels + c) * n_out;
        for (int64_t xo = 0; xo < n_out; ++xo) girow[am[xo]] += grow[xo];
      }
    }
  };
  return out;
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::concat_channels(Value a, Value b) {
  const Tensor3<Real>& ta = value(a);
  const Tensor3<Real>& tb = value(b);
  if (ta.batch != tb.batch || ta.length != tb.length)
    throw Error(ErrorCategory::shape, "concat requires equal batch and length");
  Tensor3<Real> result(ta.batch, ta.channels + tb.channels, ta.length);
  for (int64_t bi = 0; bi < ta.batch; ++bi) {
    for (int64_t c = 0; c < ta.channels; ++c)
      std::copy(ta.row(bi, c), ta.row(bi, c) + ta.length, result.row(bi, c));
    for (int64_t c = 0; c < tb.channels; ++c)
      std::copy(tb.row(bi, c), tb.row(bi, c) + tb.length,
                result.row(bi, ta.channels + c));
  }
  const int64_t ca = ta.channels;
  Value out = push_owned(std::move(result));
  nodes_.back().back = [a, b, out, ca](Tape& t) {
    const Tensor3<Real>& go = t.grad_buf(out);
    Tensor3<Real>& ga = t.grad_buf(a);
    Tensor3<Real>& gb = t.grad_buf(b);
    for (int64_t bi = 0; bi < go.batch; ++bi) {
      for (int64_t c = 0; c < ga.channels; ++c) {
        const Real* src = go.row(bi, c);
        Real* dst = ga.row(bi, c);
        for (int64_t i = 0; i < go.length; ++i) dst[i] += src[i];
      }
      for (int64_t c = 0; c < gb.channels; ++c) {
        const Real* src = go.row(bi, ca + c);
        Real* dst = gb.row(bi, c);
        for (int64_t i = 0; i < go.length; ++i) dst[i] += src[i];
      }
    }
  };
  return out;
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::permute_channels(Value x,
                                                        std::vector<int64_t> perm) {
  const Tensor3<Real>& xin = value(x);
  if (static_cast<int64_t>(perm.size()) != xin.channels)
    throw Error(ErrorCategory::shape, "permutation size must equal channel count");
  std::vector<bool> seen(perm.size(), false);
  for (int64_t p : perm) {
    if (p < 0 || p >= xin.channels || seen[p])
      throw Error(ErrorCategory::shape, "channel permutation is not a bijection");
    seen[p] = true;
  }
  Tensor3<Real> result(xin.batch, xin.channels, xin.length);
  for (int64_t b = 0; b < xin.batch; ++b)
    for (int64_t c = 0; c < xin.channels; ++c)
      std::copy(xin.row(b, perm[c]), xin.row(b, perm[c]) + xin.length,
                result.row(b, c));
  Value out = push_owned(std::move(result));
  auto perm_shared = std::make_shared<std::vector<int64_t>>(std::move(perm));
  nodes_.back().back = [x, out, perm_shared](Tape& t) {
    const Tensor3<Real>& go = t.grad_buf(out);
    Tensor3<Real>& gi = t.grad_buf(x);
    for (int64_t b = 0; b < go.batch; ++b) {
      for (int64_t c = 0; c < go.channels; ++c) {
        const Real* src = go.row(b, c);
        Real* dst = gi.row(b, (*perm_shared)[c]);
        for (int64_t i = 0; i < go.length; ++i) dst[i] += src[i];
      }
    }
  };
  return out;
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::leaky_relu(Value x, Real slope) {
  if (!(slope >= Real(0) && slope <= Real(1)))
    throw Error(ErrorCategory::shape, "leaky_relu slope must be in [0, 1]");
  const Tensor3<Real>& xin = value(x);
  Tensor3<Real> result(xin.batch, xin.channels, xin.length);
  // F = max(x, slope*x); dF/dx = 1 for x >= 0 (positive branch at 0), else slope
  for (int64_t i = 0; i < xin.size(); ++i) {
    const Real v = xin.v[i];
    result.v[i] = v >= Real(0) ? v : slope * v;
  }
  Value out = push_owned(std::move(result));
  nodes_.back().back = [x, out, slope](Tape& t) {
    const Tensor3<Real>& go = t.grad_buf(out);
    const Tensor3<Real>& xv = t.value(x);
    Tensor3<Real>& gi = t.grad_buf(x);
    for (int64_t i = 0; i < go.size(); ++i)
      gi.v[i] += xv.v[i] >= Real(0) ? go.v[i] : slope * go.v[i];
  };
  return out;
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::l1_loss(Value pred, Value target) {
  return l1_loss_masked(pred, target, Value{});
}

template <class Real>
typename Tape<Real>::Value Tape<Real>::l1_loss_masked(Value pred, Value target,
                                                      Value mask) {
  const Tensor3<Real>& p = value(pred);
  const Tensor3<Real>& t = value(target);
  if (!p.same_shape(t))
    throw Error(ErrorCategory::shape, "l1_loss requires identical shapes");
  const bool masked = !mask.detached();
  const Tensor3<Real>* m = masked ? &value(mask) : nullptr;
  Real denom;
  if (masked) {
    if (!m->same_shape(p))
      throw Error(ErrorCategory::shape, "l1_loss mask shape mismatch");
    denom = kernels::fixed_order_sum(m->v.data(), m->size());
    if (!(denom > Real(0)))
      throw Error(ErrorCategory::shape, "l1_loss mask has zero total weight");
  } else {
    denom = static_cast<Real>(p.size());
  }

  // F = sum(mask * |p - t|) / sum(mask); dF/dp = mask * sign(p - t) / sum(mask)
  std::vector<Real> absdiff(static_cast<size_t>(p.size()));
  for (int64_t i = 0; i < p.size(); ++i) {
    Real d = p.v[i] - t.v[i];
    d = d < Real(0) ? -d : d;
    absdiff[i] = masked ? m->v[i] * d : d;
  }
  Tensor3<Real> result(1, 1, 1);
  result.v[0] = kernels::fixed_order_sum(absdiff.data(), p.size()) / denom;
  Value out = push_owned(std::move(result));
  nodes_.back().back = [pred, target, mask, masked, denom, out](Tape& tp) {
    const Real go = tp.grad_buf(out).v[0];
    const Tensor3<Real>& pv = tp.value(pred);
    const Tensor3<Real>& tv = tp.value(target);
    const Tensor3<Real>* mv = masked ? &tp.value(mask) : nullptr;
    Tensor3<Real>& gp = tp.grad_buf(pred);
    Tensor3<Real>& gt = tp.grad_buf(target);
    for (int64_t i = 0; i < pv.size(); ++i) {
      const Real d = pv.v[i] - tv.v[i];
      // sign(0) = 0: the subgradient chosen at exact equality
      Real s = d > Real(0) ? Real(1) : (d < Real(0) ? Real(-1) : Real(0));
      if (masked) s *= mv->v[i];
      const Real g = go * s / denom;
      gp.v[i] += g;
      gt.v[i] -= g;
    }
  };
  return out;
}

template <class Real>
void Tape<Real>::backward(Value loss) {
  Node& root = node(loss);  // throws on detached handles
  if (root.val->size() != 1)
    throw Error(ErrorCategory::shape, "backward requires a scalar loss node");

  // Fresh per-call internal gradients; leaf sinks accumulate across calls.
  for (auto& n : nodes_)
    n.grad = Tensor3<Real>(n.val->batch, n.val->channels, n.val->length);
  nodes_[loss.id].grad.v[0] = Real(1);

  for (int32_t i = loss.id; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back(*this);

  for (auto& n : nodes_) {
    if (!n.sink) continue;
    for (int64_t i = 0; i < n.grad.size(); ++i) n.sink->v[i] += n.grad.v[i];
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace senh
