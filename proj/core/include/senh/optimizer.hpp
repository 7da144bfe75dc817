#ifndef SENH_OPTIMIZER_HPP
#define SENH_OPTIMIZER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "senh/tensor.hpp"

namespace senh {

// Named trainable tensor with a persistent gradient buffer.
template <class Real>
struct Parameter {
  std::string name;
  Tensor3<Real> value;
  Tensor3<Real> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor3<Real> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.batch, value.channels, value.length) {}

  void zero_grad() { grad.zero(); }
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment update with bias correction:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
template <class Real>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  int64_t step_count() const { return step_; }

  // The parameter list must be index-stable across calls; moment buffers are
  // allocated on first use and keyed by position.
  void step(std::vector<Parameter<Real>*>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i]->value.v.size(), Real(0));
        v_[i].assign(params[i]->value.v.size(), Real(0));
      }
    }
    if (m_.size() != params.size())
      throw Error(ErrorCategory::shape, "optimizer parameter list changed size");
    ++step_;
    const Real b1 = static_cast<Real>(cfg_.beta1);
    const Real b2 = static_cast<Real>(cfg_.beta2);
    const Real corr1 = static_cast<Real>(1.0 - std::pow(cfg_.beta1, double(step_)));
    const Real corr2 = static_cast<Real>(1.0 - std::pow(cfg_.beta2, double(step_)));
    const Real lr = static_cast<Real>(cfg_.lr);
    const Real eps = static_cast<Real>(cfg_.eps);
    for (size_t i = 0; i < params.size(); ++i) {
      Parameter<Real>& p = *params[i];
      if (p.value.v.size() != m_[i].size())
        throw Error(ErrorCategory::shape, "optimizer state shape mismatch for " + p.name);
      Real* pv = p.value.v.data();
      const Real* g = p.grad.v.data();
      Real* m = m_[i].data();
      Real* v = v_[i].data();
      const int64_t n = p.value.size();
      for (int64_t j = 0; j < n; ++j) {
        m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
        v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
        const Real mhat = m[j] / corr1;
        const Real vhat = v[j] / corr2;
        pv[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

 private:
  AdamConfig cfg_;
  int64_t step_ = 0;
  std::vector<std::vector<Real>> m_, v_;
};

}  // namespace senh

#endif  // SENH_OPTIMIZER_HPP
