#pragma once

#include <span>
#include <string>

namespace strae::eval {

enum class Metric { spearman, accuracy };

std::string to_string(Metric m);

struct TaskResult {
  std::string task;
  Metric metric = Metric::spearman;
  /// rho in [-1, 1] or accuracy in [0, 1].
  double value = 0.0;
  /// Spread over probe seeds; zero for similarity tasks.
  double stddev = 0.0;
};

/// rho x 100 or accuracy as a percentage.
double scaled(const TaskResult& r);

/// Arithmetic mean of the scaled results. Throws InputError when empty.
double aggregate_score(std::span<const TaskResult> results);

}  // namespace strae::eval
