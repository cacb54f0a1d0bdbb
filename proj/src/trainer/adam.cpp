#include "strae/trainer/adam.hpp"

#include <cmath>

#include "strae/error.hpp"

namespace strae::train {

AdamState AdamState::for_params(std::span<diff::Parameter* const> params) {
  AdamState s;
  for (auto* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

void adam_step(std::span<diff::Parameter* const> params, AdamState& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: optimizer state does not match parameter count");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto* p = params[k];
    if (p->grad.shape() != p->value.shape() || state.m[k].shape() != p->value.shape()) {
      throw ContractError("adam_step: shape mismatch for parameter '" + p->name + "'");
    }
    if (!p->grad.all_finite()) {
      throw NonFiniteError("adam_step: non-finite gradient for parameter '" + p->name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto theta = params[k]->value.data();
    auto g = params[k]->grad.data();
    auto m = state.m[k].data();
    auto v = state.v[k].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double gradient_norm(std::span<diff::Parameter* const> params) {
  double sq = 0.0;
  for (auto* p : params)
    for (double g : p->grad.data()) sq += g * g;
  return std::sqrt(sq);
}

void clip_gradients(std::span<diff::Parameter* const> params, double max_norm) {
  if (max_norm <= 0.0) return;
  double norm = gradient_norm(params);
  if (norm <= max_norm) return;
  double factor = max_norm / norm;
  for (auto* p : params)
    for (double& g : p->grad.data()) g *= factor;
}

}  // namespace strae::train
