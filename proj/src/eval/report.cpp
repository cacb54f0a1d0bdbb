#include "strae/eval/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "strae/error.hpp"

namespace strae::eval {

ReportRow make_row(std::string checkpoint, std::string group, std::uint64_t seed, std::vector<TaskResult> results) {
  ReportRow row{std::move(checkpoint), std::move(group), seed, std::move(results), 0.0};
  row.score = aggregate_score(row.results);
  return row;
}

std::vector<GroupSummary> summarize(const std::vector<ReportRow>& rows) {
  std::vector<GroupSummary> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& row : rows) {
    auto [it, fresh] = slot.emplace(row.group, out.size());
    if (fresh) {
      GroupSummary g;
      g.group = row.group;
      g.best = row;
      for (const auto& r : row.results) g.tasks.push_back(r.task);
      g.mean.assign(g.tasks.size(), 0.0);
      g.stddev.assign(g.tasks.size(), 0.0);
      out.push_back(std::move(g));
    }
    GroupSummary& g = out[it->second];
    if (row.results.size() != g.tasks.size())
      throw InputError("report: rows of group '" + row.group + "' report different tasks");
    for (std::size_t t = 0; t < g.tasks.size(); ++t)
      if (row.results[t].task != g.tasks[t])
        throw InputError("report: rows of group '" + row.group + "' report different tasks");
    ++g.runs;
    if (row.score > g.best.score) g.best = row;
  }

  for (auto& g : out) {
    std::vector<std::vector<double>> values(g.tasks.size());
    std::vector<double> scores;
    for (const auto& row : rows) {
      if (row.group != g.group) continue;
      for (std::size_t t = 0; t < g.tasks.size(); ++t) values[t].push_back(scaled(row.results[t]));
      scores.push_back(row.score);
    }
    auto moments = [](const std::vector<double>& xs, double& mean, double& sd) {
      mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      sd = std::sqrt(var / static_cast<double>(xs.size()));
    };
    for (std::size_t t = 0; t < g.tasks.size(); ++t) moments(values[t], g.mean[t], g.stddev[t]);
    moments(scores, g.score_mean, g.score_stddev);
  }
  return out;
}

namespace {

std::string fixed(double x, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string cell(const TaskResult& r) {
  if (r.metric == Metric::spearman) return fixed(r.value, 3);
  std::string s = fixed(100.0 * r.value, 1);
  if (r.stddev > 0.0) s += " +- " + fixed(100.0 * r.stddev, 2);
  return s;
}

}  // namespace

std::string render_text(const std::vector<ReportRow>& rows) {
  std::string out;
  out += "checkpoint\tgroup\tseed";
  if (!rows.empty())
    for (const auto& r : rows.front().results) out += "\t" + r.task;
  out += "\tScore\n";
  for (const auto& row : rows) {
    out += row.checkpoint + "\t" + row.group + "\t" + std::to_string(row.seed);
    for (const auto& r : row.results) out += "\t" + cell(r);
    out += "\t" + fixed(row.score) + "\n";
  }

  auto groups = summarize(rows);
  out += "\nbest seed\n";
  for (const auto& g : groups) {
    out += g.group + "\t" + g.best.checkpoint;
    for (const auto& r : g.best.results) out += "\t" + cell(r);
    out += "\t" + fixed(g.best.score) + "\n";
  }
  out += "\nmean +- std over seeds\n";
  for (const auto& g : groups) {
    out += g.group + "\truns=" + std::to_string(g.runs);
    for (std::size_t t = 0; t < g.tasks.size(); ++t) out += "\t" + fixed(g.mean[t]) + " +- " + fixed(g.stddev[t]);
    out += "\t" + fixed(g.score_mean) + " +- " + fixed(g.score_stddev) + "\n";
  }
  return out;
}

std::string render_json(const std::vector<ReportRow>& rows) {
  using nlohmann::json;
  auto results_json = [](const std::vector<TaskResult>& results) {
    json a = json::array();
    for (const auto& r : results)
      a.push_back({{"task", r.task}, {"metric", to_string(r.metric)}, {"value", r.value}, {"stddev", r.stddev},
                   {"scaled", scaled(r)}});
    return a;
  };
  json doc;
  doc["rows"] = json::array();
  for (const auto& row : rows)
    doc["rows"].push_back({{"checkpoint", row.checkpoint},
                           {"group", row.group},
                           {"seed", row.seed},
                           {"results", results_json(row.results)},
                           {"score", row.score}});
  doc["groups"] = json::array();
  for (const auto& g : summarize(rows)) {
    json tasks = json::array();
    for (std::size_t t = 0; t < g.tasks.size(); ++t)
      tasks.push_back({{"task", g.tasks[t]}, {"mean", g.mean[t]}, {"stddev", g.stddev[t]}});
    doc["groups"].push_back({{"group", g.group},
                             {"runs", g.runs},
                             {"best_checkpoint", g.best.checkpoint},
                             {"best_score", g.best.score},
                             {"tasks", tasks},
                             {"score_mean", g.score_mean},
                             {"score_stddev", g.score_stddev}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace strae::eval
