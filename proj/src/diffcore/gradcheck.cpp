#include "strae/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "strae/error.hpp"

namespace strae::diff {

namespace {

double evaluate(const Objective& f) {
  Tape tape;
  double value = f(tape).value().item();
  if (!std::isfinite(value)) throw NonFiniteError("gradient check objective is not finite");
  return value;
}

}  // namespace

GradCheckResult check_gradients(const Objective& f, std::span<Parameter* const> params,
                                const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ContractError("gradient check step must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    if (!std::isfinite(loss.value().item())) throw NonFiniteError("gradient check objective is not finite");
    tape.backward(loss);
  }

  GradCheckResult result;
  std::mt19937_64 rng(options.seed);
  for (Parameter* p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    std::size_t limit = options.max_coordinates == 0 ? n : std::max<std::size_t>(options.max_coordinates, 100);
    if (limit < n) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(limit);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t idx : coords) {
      const double original = p->value[idx];
      p->value[idx] = original + options.step;
      double plus = evaluate(f);
      p->value[idx] = original - options.step;
      double minus = evaluate(f);
      p->value[idx] = original;

      double numeric = (plus - minus) / (2.0 * options.step);
      double analytic = p->grad[idx];
      double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      double rel = std::abs(analytic - numeric) / denom;
      ++result.coordinates_checked;
      if (rel > result.max_relative_error || result.worst_parameter.empty()) {
        if (rel >= result.max_relative_error) {
          result.max_relative_error = rel;
          result.worst_parameter = p->name;
          result.worst_index = idx;
          result.worst_tape_grad = analytic;
          result.worst_numeric_grad = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace strae::diff
