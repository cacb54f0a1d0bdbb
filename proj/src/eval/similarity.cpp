#include "strae/eval/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "strae/corpus/bracketed.hpp"
#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"

namespace strae::eval {

Embedding word_embedding(const model::ModelParams& params, const corpus::Vocabulary& vocab, std::string_view token,
                         bool lowercase) {
  std::string key = lowercase ? corpus::lowercase_ascii(token) : std::string(token);
  auto id = static_cast<std::size_t>(vocab.id(key));
  if (id >= params.vocab_size) throw ContractError("word_embedding: vocabulary larger than the model");
  std::size_t d = params.dim();
  auto data = params.embedding.value.data();
  return {data.begin() + id * d, data.begin() + (id + 1) * d};
}

Embedding sentence_embedding(const model::ModelParams& params, const corpus::Vocabulary& vocab,
                             std::string_view text, model::StructureSource source, bool lowercase) {
  corpus::TokenizerOptions options{lowercase};
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '(') {
    auto parsed = corpus::parse_bracketed_tree(text);
    auto tree = corpus::binarize(parsed.tree);
    auto ids = corpus::encode_sentence(parsed.tokens, vocab, options);
    return model::sentence_root(params, ids, source, &tree);
  }
  if (source == model::StructureSource::given)
    throw InputError("sentence_embedding: structure tree_file needs bracketed sentences");
  auto ids = corpus::encode_sentence(corpus::tokenize(text, options), vocab, options);
  return model::sentence_root(params, ids, source);
}

std::vector<double> fractional_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("correlation: length mismatch");
  if (xs.size() < 2) throw InputError("correlation: need at least two values");
  double n = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InputError("correlation: undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InputError("spearman: length mismatch");
  auto rx = fractional_ranks(xs);
  auto ry = fractional_ranks(ys);
  return pearson(rx, ry);
}

std::string to_string(TaskKind k) { return k == TaskKind::word ? "word" : "sentence"; }

TaskKind parse_task_kind(const std::string& text) {
  if (text == "word") return TaskKind::word;
  if (text == "sentence") return TaskKind::sentence;
  throw InputError("unknown task kind '" + text + "'");
}

SimilarityTask load_similarity_task(const std::filesystem::path& path, TaskKind kind) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  SimilarityTask task;
  task.kind = kind;
  task.name = path.stem().string();
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    SimilarityPair p{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), 0.0};
    std::string score = line.substr(t2 + 1);
    char* end = nullptr;
    p.gold = std::strtod(score.c_str(), &end);
    if (score.empty() || *end != '\0' || !std::isfinite(p.gold))
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad score '" + score + "'");
    task.pairs.push_back(std::move(p));
  }
  if (task.pairs.size() < 2) throw InputError(path.string() + ": need at least two pairs");
  return task;
}

EmbedFn model_embedder(const model::ModelParams& params, const corpus::Vocabulary& vocab, TaskKind kind,
                       model::StructureSource source, bool lowercase) {
  if (kind == TaskKind::word)
    return [&params, &vocab, lowercase](const std::string& w) { return word_embedding(params, vocab, w, lowercase); };
  return [&params, &vocab, source, lowercase](const std::string& s) {
    return sentence_embedding(params, vocab, s, source, lowercase);
  };
}

double eval_similarity(const SimilarityTask& task, const EmbedFn& embed, std::size_t threads) {
  std::vector<double> scores(task.pairs.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto a = embed(task.pairs[i].first);
      auto b = embed(task.pairs[i].second);
      scores[i] = diff::cosine(a, b);
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, task.pairs.size());
  if (threads == 1) {
    work(0, scores.size());
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    std::size_t chunk = (scores.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t * chunk, std::min(scores.size(), (t + 1) * chunk));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::vector<double> gold;
  gold.reserve(task.pairs.size());
  for (const auto& p : task.pairs) gold.push_back(p.gold);
  return spearman_rho(scores, gold);
}

}  // namespace strae::eval
