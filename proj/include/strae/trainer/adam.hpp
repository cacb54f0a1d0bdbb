#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "strae/diffcore/tape.hpp"

namespace strae::train {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  /// First and second moments, one per parameter in update order.
  std::vector<diff::Tensor> m;
  std::vector<diff::Tensor> v;

  /// Zero moments shaped like `params`.
  static AdamState for_params(std::span<diff::Parameter* const> params);
};

/// One bias-corrected Adam update from each parameter's `grad`:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
/// Throws NonFiniteError, leaving parameters untouched, if any gradient is
/// NaN/Inf.
void adam_step(std::span<diff::Parameter* const> params, AdamState& state, double lr);

/// Global L2 norm over all gradients.
double gradient_norm(std::span<diff::Parameter* const> params);

/// Rescales all gradients so their global norm is at most `max_norm`.
void clip_gradients(std::span<diff::Parameter* const> params, double max_norm);

}  // namespace strae::train
