#pragma once

#include <functional>
#include <string>
#include <vector>

#include "strae/diffcore/tensor.hpp"

namespace strae::diff {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Gradient after Tape::backward; an empty tensor for nodes that do not
  /// require grad.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// A learnable tensor living outside any tape. Gradients from every tape
/// that watches it accumulate into `grad` until zero_grad().
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad = Tensor(value.shape()); }
};

/// Define-by-run record of executed operations. Each sentence batch builds
/// a fresh tape; backward walks it in exact reverse execution order.
/// A tape is single-threaded.
class Tape {
 public:
  /// Accumulates `out_grad` into the gradients of the node's inputs.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Constant that aliases `value` instead of copying it; `value` must
  /// outlive the tape and stay unmodified while the tape is in use.
  Var reference(const Tensor& value);
  /// Leaf aliasing `parameter.value` whose gradient flows into
  /// `parameter.grad` on backward. Same lifetime rule as reference().
  Var watch(Parameter& parameter);

  /// Records an op result. The node requires grad iff any input does; the
  /// backward function is dropped otherwise. Throws NonFiniteError if
  /// `value` contains NaN/Inf.
  Var record(const char* op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and back-propagates. `loss` must hold a
  /// single element. Watched parameters receive their gradients.
  void backward(Var loss);

  /// Mutable gradient buffer of `v`, allocated as zeros on first use.
  Tensor& grad_of(Var v);

  const Tensor& value(std::size_t index) const {
    const Node& n = nodes_[index];
    return n.external ? *n.external : n.value;
  }
  const Tensor& grad(std::size_t index) const;
  bool requires_grad(std::size_t index) const { return nodes_[index].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    const char* op = "";
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* parameter = nullptr;
  };

  std::vector<Node> nodes_;
  Tensor empty_;
};

}  // namespace strae::diff
