#include "strae/eval/score.hpp"

#include "strae/error.hpp"

namespace strae::eval {

std::string to_string(Metric m) { return m == Metric::spearman ? "spearman" : "accuracy"; }

double scaled(const TaskResult& r) { return 100.0 * r.value; }

double aggregate_score(std::span<const TaskResult> results) {
  if (results.empty()) throw InputError("score: no task results");
  double total = 0.0;
  for (const auto& r : results) total += scaled(r);
  return total / static_cast<double>(results.size());
}

}  // namespace strae::eval
