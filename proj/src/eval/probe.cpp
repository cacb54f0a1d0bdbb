#include "strae/eval/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"
#include "strae/trainer/adam.hpp"

namespace strae::eval {

using diff::Parameter;
using diff::Tape;
using diff::Tensor;
using diff::Var;

std::string to_string(ProbeKind k) { return k == ProbeKind::single_sentence ? "single_sentence" : "sentence_pair"; }

namespace {

std::vector<ProbeExample> read_split(const std::filesystem::path& path, std::size_t& fields) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::vector<ProbeExample> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    std::string where = path.string() + ":" + std::to_string(lineno);
    if (cols.size() != 2 && cols.size() != 3) throw InputError(where + ": expected 2 or 3 tab-separated fields");
    if (fields == 0) fields = cols.size();
    if (cols.size() != fields) throw InputError(where + ": field count differs from earlier lines");
    const std::string& label = cols.back();
    if (label != "0" && label != "1") throw InputError(where + ": label must be 0 or 1, got '" + label + "'");
    ProbeExample ex;
    ex.text = cols[0];
    if (cols.size() == 3) ex.text2 = cols[1];
    ex.label = label == "1";
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw InputError(path.string() + ": empty split");
  return out;
}

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
  return base.string() + suffix;
}

struct Probe {
  std::vector<Parameter> params;

  std::vector<Parameter*> pointers() {
    std::vector<Parameter*> out;
    for (auto& p : params) out.push_back(&p);
    return out;
  }
};

Parameter affine_weight(const char* name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w({in, out});
  for (auto& x : w.data()) x = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53 * 2.0 * bound - bound;
  return Parameter(name, std::move(w));
}

Parameter affine_bias(const char* name, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor b({out});
  for (auto& x : b.data()) x = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53 * 2.0 * bound - bound;
  return Parameter(name, std::move(b));
}

Probe make_probe(ProbeKind kind, std::size_t in, std::size_t hidden, std::mt19937_64& rng) {
  Probe p;
  if (kind == ProbeKind::single_sentence) {
    p.params.push_back(affine_weight("w1", in, hidden, rng));
    p.params.push_back(affine_bias("b1", in, hidden, rng));
    p.params.push_back(affine_weight("w2", hidden, 2, rng));
    p.params.push_back(affine_bias("b2", hidden, 2, rng));
  } else {
    p.params.push_back(affine_weight("w", in, 2, rng));
    p.params.push_back(affine_bias("b", in, 2, rng));
  }
  return p;
}

Var logits(Tape& tape, Probe& probe, Var x, bool train) {
  auto use = [&](Parameter& p) { return train ? tape.watch(p) : tape.reference(p.value); };
  if (probe.params.size() == 4) {
    Var h = diff::tanh(diff::add_row_broadcast(diff::matmul(x, use(probe.params[0])), use(probe.params[1])));
    return diff::add_row_broadcast(diff::matmul(h, use(probe.params[2])), use(probe.params[3]));
  }
  return diff::add_row_broadcast(diff::matmul(x, use(probe.params[0])), use(probe.params[1]));
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  std::size_t d = x.cols();
  Tensor out({rows.size(), d});
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(src.begin() + rows[i] * d, d, dst.begin() + i * d);
  return out;
}

double accuracy(Probe& probe, const Features& f) {
  Tape tape;
  Var out = logits(tape, probe, tape.reference(f.x), false);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::size_t pred = out.value().at(i, 1) > out.value().at(i, 0) ? 1 : 0;
    correct += pred == f.y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(f.size());
}

ProbeRun train_one(const Features& train, const Features& dev, const Features& test, ProbeKind kind,
                   std::uint64_t seed, const ProbeOptions& options) {
  std::seed_seq seq{static_cast<std::uint32_t>(options.base_seed), static_cast<std::uint32_t>(options.base_seed >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  Probe probe = make_probe(kind, train.x.cols(), options.hidden, rng);
  auto params = probe.pointers();
  train::AdamState adam = train::AdamState::for_params(params);

  ProbeRun run;
  run.seed = seed;
  Probe best = probe;
  double best_dev = -1.0;
  std::size_t stale = 0;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= options.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      std::size_t end = std::min(order.size(), begin + options.batch_size);
      std::span<const std::size_t> rows(order.data() + begin, end - begin);
      std::vector<std::size_t> labels;
      for (auto r : rows) labels.push_back(train.y[r]);
      for (auto* p : params) p->zero_grad();
      Tape tape;
      Var x = tape.constant(gather_rows(train.x, rows));
      Var loss = diff::scale(diff::mean(diff::pick_rows(diff::log_softmax_rows(logits(tape, probe, x, true)), labels)),
                             -1.0);
      tape.backward(loss);
      train::adam_step(params, adam, options.lr);
    }
    run.epochs = epoch;
    double acc = accuracy(probe, dev);
    if (acc > best_dev) {
      best_dev = acc;
      best = probe;
      stale = 0;
    } else if (++stale >= options.patience) {
      break;
    }
  }
  run.dev_accuracy = best_dev;
  run.test_accuracy = accuracy(best, test);
  return run;
}

void check_features(const Features& f, const char* split, std::size_t dim) {
  if (f.size() == 0) throw InputError(std::string("probe: empty ") + split + " split");
  if (f.x.rank() != 2 || f.x.rows() != f.size()) throw ContractError(std::string("probe: malformed ") + split + " features");
  if (f.x.cols() != dim) throw ContractError(std::string("probe: feature width differs in ") + split + " split");
  for (auto y : f.y)
    if (y > 1) throw InputError(std::string("probe: non-binary label in ") + split + " split");
}

}  // namespace

ProbeTask load_probe_task(const std::filesystem::path& base) {
  ProbeTask task;
  task.name = base.filename().string();
  std::size_t fields = 0;
  task.train = read_split(with_suffix(base, ".train"), fields);
  task.dev = read_split(with_suffix(base, ".dev"), fields);
  task.test = read_split(with_suffix(base, ".test"), fields);
  task.kind = fields == 3 ? ProbeKind::sentence_pair : ProbeKind::single_sentence;
  return task;
}

Features featurize(std::span<const ProbeExample> examples, ProbeKind kind, const EmbedFn& embed) {
  Features f;
  std::vector<double> values;
  std::size_t width = 0;
  for (const auto& ex : examples) {
    auto u = embed(ex.text);
    if (kind == ProbeKind::sentence_pair) {
      auto v = embed(ex.text2);
      u.insert(u.end(), v.begin(), v.end());
    }
    if (width == 0) width = u.size();
    if (u.size() != width) throw ContractError("featurize: embeddings differ in width");
    values.insert(values.end(), u.begin(), u.end());
    f.y.push_back(static_cast<std::size_t>(ex.label));
  }
  f.x = Tensor({examples.size(), width}, std::move(values));
  return f;
}

ProbeResult train_probe(const Features& train, const Features& dev, const Features& test, ProbeKind kind,
                        std::span<const std::uint64_t> seeds, const ProbeOptions& options) {
  if (seeds.empty()) throw InputError("probe: no seeds");
  if (train.size() == 0) throw InputError("probe: empty train split");
  std::size_t dim = train.x.cols();
  check_features(train, "train", dim);
  check_features(dev, "dev", dim);
  check_features(test, "test", dim);

  ProbeResult result;
  result.runs.resize(seeds.size());
  std::size_t threads = std::clamp<std::size_t>(options.threads, 1, seeds.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) result.runs[i] = train_one(train, dev, test, kind, seeds[i], options);
  } else {
    std::vector<std::exception_ptr> errors(seeds.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < seeds.size(); i += threads) try {
            result.runs[i] = train_one(train, dev, test, kind, seeds[i], options);
          } catch (...) {
            errors[i] = std::current_exception();
          }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  double n = static_cast<double>(result.runs.size());
  for (const auto& r : result.runs) result.mean += r.test_accuracy;
  result.mean /= n;
  double var = 0.0;
  for (const auto& r : result.runs) var += (r.test_accuracy - result.mean) * (r.test_accuracy - result.mean);
  result.stddev = std::sqrt(var / n);
  return result;
}

ProbeResult train_probe(const ProbeTask& task, const EmbedFn& embed, std::span<const std::uint64_t> seeds,
                        const ProbeOptions& options) {
  auto train = featurize(task.train, task.kind, embed);
  auto dev = featurize(task.dev, task.kind, embed);
  auto test = featurize(task.test, task.kind, embed);
  return train_probe(train, dev, test, task.kind, seeds, options);
}

}  // namespace strae::eval
