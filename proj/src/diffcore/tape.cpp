#include "strae/diffcore/tape.hpp"

#include <algorithm>

#include "strae/error.hpp"

namespace strae::diff {

const Tensor& Var::value() const { return tape_->value(index_); }
const Tensor& Var::grad() const { return tape_->grad(index_); }
bool Var::requires_grad() const { return tape_->requires_grad(index_); }

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

Var Tape::constant(Tensor value) {
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::reference(const Tensor& value) {
  Node node;
  node.op = "reference";
  node.external = &value;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::watch(Parameter& parameter) {
  Node node;
  node.op = "parameter";
  node.external = &parameter.value;
  node.requires_grad = true;
  node.parameter = &parameter;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NonFiniteError(std::string("non-finite value produced by op '") + op + "'");
  }
  Node node;
  node.op = op;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError(std::string("op '") + op + "' mixes vars from different tapes");
    node.requires_grad = node.requires_grad || nodes_[in.index()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_of(Var v) {
  Node& node = nodes_.at(v.index());
  const Tensor& val = value(v.index());
  if (node.grad.shape() != val.shape() || node.grad.size() != val.size()) node.grad = Tensor(val.shape());
  return node.grad;
}

const Tensor& Tape::grad(std::size_t index) const {
  const Node& node = nodes_.at(index);
  const Tensor& val = value(index);
  if (node.grad.shape() != val.shape() || node.grad.size() != val.size()) return empty_;
  return node.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("backward on a var from another tape");
  if (loss.value().size() != 1) throw ContractError("backward requires a single-element loss");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].requires_grad) nodes_[i].grad = Tensor(value(i).shape());
  }
  if (!nodes_[loss.index()].requires_grad) return;
  nodes_[loss.index()].grad[0] = 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.backward) continue;
    const auto& g = node.grad.values();
    if (std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) continue;
    // The closure may append to nothing but may touch other nodes' grads;
    // node references stay valid because nodes_ does not grow here.
    node.backward(*this, node.grad);
  }
  for (auto& node : nodes_) {
    if (!node.parameter) continue;
    if (!node.grad.all_finite()) {
      throw NonFiniteError("non-finite gradient for parameter '" + node.parameter->name + "'");
    }
    Parameter& p = *node.parameter;
    if (p.grad.shape() != p.value.shape()) p.zero_grad();
    auto dst = p.grad.data();
    auto src = node.grad.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

}  // namespace strae::diff
