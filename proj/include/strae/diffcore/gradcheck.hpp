#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "strae/diffcore/tape.hpp"

namespace strae::diff {

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates probed per parameter tensor; 0 probes every coordinate.
  /// Values below 100 are raised to 100.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_tape_grad = 0.0;
  double worst_numeric_grad = 0.0;
  std::size_t coordinates_checked = 0;
};

/// Builds the scalar objective on the given tape; must watch `params`.
using Objective = std::function<Var(Tape&)>;

/// Compares tape gradients with central differences
/// (f(θ+h) - f(θ-h)) / 2h. Relative error per coordinate is
/// |g_tape - g_fd| / max(|g_tape|, |g_fd|, 1e-8). Parameter values are
/// restored before returning. Throws NonFiniteError if f is not finite.
GradCheckResult check_gradients(const Objective& f, std::span<Parameter* const> params,
                                const GradCheckOptions& options = {});

}  // namespace strae::diff
