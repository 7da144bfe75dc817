#ifndef SENH_TAPE_HPP
#define SENH_TAPE_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "senh/tensor.hpp"

namespace senh {

// Reverse-mode autodiff over Tensor3 values. A Tape is one acyclic
// computation record: ops append nodes, backward() walks them in reverse
// creation order (parents always precede consumers), which makes traversal
// deterministic. Leaf gradients accumulate additively into caller-owned
// sinks; repeated backward calls without resetting the sinks add up.
template <class Real>
class Tape {
 public:
  struct Value {
    int32_t id = -1;
    bool detached() const { return id < 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf referencing caller-owned storage; `value` must outlive the tape.
  // `grad_sink`, when non-null, receives accumulated gradients on backward.
  Value input(const Tensor3<Real>* value, Tensor3<Real>* grad_sink = nullptr);

  // Leaf owning a copy; never receives gradients.
  Value constant(Tensor3<Real> value);

  Value conv1d(Value x, Value w, Value bias, const ConvGeom& g);
  Value transposed_conv1d(Value x, Value w, Value bias, const ConvGeom& g);
  Value maxpool1d(Value x, int64_t window, int64_t stride);
  Value concat_channels(Value a, Value b);
  Value permute_channels(Value x, std::vector<int64_t> perm);
  Value leaky_relu(Value x, Real slope);
  // Mean absolute difference; with a mask, a weighted mean over mask weight.
  Value l1_loss(Value pred, Value target);
  Value l1_loss_masked(Value pred, Value target, Value mask);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every reachable
  // leaf sink. `loss` must be a scalar (1,1,1) node of this tape.
  void backward(Value loss);

  const Tensor3<Real>& value(Value v) const;
  // Per-call gradient of an internal node (diagnostics; overwritten by the
  // next backward).
  const Tensor3<Real>& grad(Value v) const;

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor3<Real> owned;
    const Tensor3<Real>* val = nullptr;
    Tensor3<Real> grad;
    Tensor3<Real>* sink = nullptr;
    std::function<void(Tape&)> back;  // distributes this node's grad to parents
  };

  Value push_owned(Tensor3<Real> owned_value);
  Node& node(Value v);
  const Node& node(Value v) const;
  Tensor3<Real>& grad_buf(Value v) { return nodes_[v.id].grad; }

  // deque: element addresses are stable under push_back, so val pointers into
  // `owned` stay valid as the record grows.
  std::deque<Node> nodes_;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace senh

#endif  // SENH_TAPE_HPP
