#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strae/eval/score.hpp"

namespace strae::eval {

/// Results of one checkpoint. Rows sharing a `group` (same setup, different
/// seeds) are summarised together.
struct ReportRow {
  std::string checkpoint;
  std::string group;
  std::uint64_t seed = 0;
  std::vector<TaskResult> results;
  double score = 0.0;
};

ReportRow make_row(std::string checkpoint, std::string group, std::uint64_t seed, std::vector<TaskResult> results);

struct GroupSummary {
  std::string group;
  std::size_t runs = 0;
  /// Row with the highest Score.
  ReportRow best;
  /// Per-task scaled mean and population std, in task order of the rows.
  std::vector<std::string> tasks;
  std::vector<double> mean;
  std::vector<double> stddev;
  double score_mean = 0.0;
  double score_stddev = 0.0;
};

/// All rows of a group must report the same tasks in the same order.
std::vector<GroupSummary> summarize(const std::vector<ReportRow>& rows);

/// Per-checkpoint table followed by best-seed and mean +- std views.
std::string render_text(const std::vector<ReportRow>& rows);
std::string render_json(const std::vector<ReportRow>& rows);

}  // namespace strae::eval
