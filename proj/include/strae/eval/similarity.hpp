#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strae/corpus/vocabulary.hpp"
#include "strae/model/params.hpp"
#include "strae/model/strae.hpp"

namespace strae::eval {

using Embedding = std::vector<double>;

/// Flattened Psi row of `token`; out-of-vocabulary tokens fall back to UNK.
Embedding word_embedding(const model::ModelParams& params, const corpus::Vocabulary& vocab, std::string_view token,
                         bool lowercase = true);

/// Flattened root embedding of a sentence. `text` is either whitespace
/// separated tokens or, when it starts with '(', a bracketed tree whose
/// leaves are the tokens. A bracketed tree supplies the structure when
/// `source` is StructureSource::given.
Embedding sentence_embedding(const model::ModelParams& params, const corpus::Vocabulary& vocab,
                             std::string_view text, model::StructureSource source, bool lowercase = true);

/// Fractional (average) ranks, 1-based.
std::vector<double> fractional_ranks(std::span<const double> xs);
double pearson(std::span<const double> xs, std::span<const double> ys);
/// Pearson correlation of fractional ranks. Throws InputError when the
/// lengths differ, fewer than two values are given, or either ranking is
/// constant.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

enum class TaskKind { word, sentence };

std::string to_string(TaskKind k);
TaskKind parse_task_kind(const std::string& text);

struct SimilarityPair {
  std::string first;
  std::string second;
  double gold = 0.0;
};

struct SimilarityTask {
  TaskKind kind = TaskKind::word;
  std::string name;
  std::vector<SimilarityPair> pairs;
};

/// TSV "item1<TAB>item2<TAB>score"; blank lines and lines starting with '#'
/// are skipped. The task name is the file stem.
SimilarityTask load_similarity_task(const std::filesystem::path& path, TaskKind kind);

using EmbedFn = std::function<Embedding(const std::string&)>;

/// Embedder for a task kind backed by a trained model.
EmbedFn model_embedder(const model::ModelParams& params, const corpus::Vocabulary& vocab, TaskKind kind,
                       model::StructureSource source, bool lowercase = true);

/// Spearman rho between per-pair embedding cosines and gold scores.
/// `threads` > 1 embeds pairs concurrently; the result does not depend on it.
double eval_similarity(const SimilarityTask& task, const EmbedFn& embed, std::size_t threads = 1);

}  // namespace strae::eval
