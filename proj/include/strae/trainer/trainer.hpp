#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "strae/corpus/tree.hpp"
#include "strae/error.hpp"
#include "strae/corpus/vocabulary.hpp"
#include "strae/diffcore/gradcheck.hpp"
#include "strae/model/strae.hpp"
#include "strae/objectives/losses.hpp"
#include "strae/trainer/adam.hpp"
#include "strae/trainer/checkpoint.hpp"
#include "strae/trainer/config.hpp"

namespace strae::train {

using corpus::TokenId;

struct Sentence {
  std::vector<TokenId> ids;
  /// Present when structure comes from a tree file.
  std::optional<corpus::Tree> tree;
};

/// Reads a corpus and, when `tree_path` is non-empty, its line-aligned tree
/// file. Blank lines are skipped. Sentences longer than config.max_length
/// are truncated when no tree is given and skipped otherwise; both cases
/// emit a warning to `warnings`.
std::vector<Sentence> load_sentences(const std::filesystem::path& corpus_path,
                                     const std::filesystem::path& tree_path, const corpus::Vocabulary& vocab,
                                     const TrainConfig& config, std::ostream* warnings = nullptr);

/// Uniform draw in the open interval (lo, hi) from the top 53 bits.
double uniform(std::mt19937_64& rng, double lo, double hi);

/// Psi ~ U(-r, r); every other matrix ~ U(-s, s) with s = sqrt(6 / 3N).
model::ModelParams init_params(const TrainConfig& config, std::size_t vocab_size, std::mt19937_64& rng);

struct LossSpec {
  objectives::Objective objective = objectives::Objective::contrastive;
  model::StructureSource source = model::StructureSource::balanced;
  double tau = 0.2;
  bool intra_view_negatives = false;

  static LossSpec from(const TrainConfig& config);
};

struct BatchForward {
  std::vector<model::Autoencoding> sentences;
  diff::Var loss;
};

/// Autoencodes every sentence of the batch on one tape and builds the
/// configured objective over it.
BatchForward forward_batch(const model::BoundParams& params, std::span<const Sentence* const> batch,
                           const LossSpec& spec);

/// Finite-difference check of one batch objective: parameters from
/// init_params(config), one random sentence of `length` tokens over
/// `vocab_size` words. Structure is balanced unless the config induces it.
diff::GradCheckResult check_model_gradients(const TrainConfig& config, std::size_t vocab_size, std::size_t length,
                                            const diff::GradCheckOptions& options = {});

class TrainingHalted : public Error {
 public:
  using Error::Error;
};

struct EpochResult {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochResult> epochs;
  std::size_t best_epoch = 0;
  std::filesystem::path final_checkpoint;
};

class Trainer {
 public:
  Trainer(TrainConfig config, corpus::Vocabulary vocab, std::vector<Sentence> train, std::vector<Sentence> dev);

  /// Loads vocabulary, corpus, dev corpus and tree files named in `config`.
  static Trainer from_config(const TrainConfig& config, std::ostream* warnings = nullptr);
  /// Restores parameters, optimizer and RNG state from a checkpoint and
  /// reloads the data it was trained on.
  static Trainer resume(const std::filesystem::path& manifest, std::ostream* warnings = nullptr);

  /// Forward, backward and one Adam step over the given sentence indices.
  double train_batch(std::span<const std::size_t> indices);
  /// Mean batch loss over `sentences` without updating anything.
  double evaluate(const std::vector<Sentence>& sentences);
  /// Shuffles, trains every batch and evaluates the dev set.
  EpochResult run_epoch();
  /// Runs the remaining epochs, writing a checkpoint and the metrics log
  /// after each one. The final checkpoint holds the epoch with the lowest
  /// dev loss. A non-finite loss raises TrainingHalted; checkpoints already
  /// written are kept.
  TrainResult run(std::ostream* progress = nullptr);

  Checkpoint checkpoint() const;

  const TrainConfig& config() const { return config_; }
  const corpus::Vocabulary& vocab() const { return vocab_; }
  const std::vector<Sentence>& train_set() const { return train_; }
  const std::vector<Sentence>& dev_set() const { return dev_; }
  model::ModelParams& params() { return params_; }
  const model::ModelParams& params() const { return params_; }
  std::size_t epochs_done() const { return epoch_; }
  /// "epoch<TAB>batch<TAB>split<TAB>loss" lines.
  const std::string& metrics_log() const { return metrics_; }

 private:
  std::vector<std::size_t> shuffled_order();

  TrainConfig config_;
  corpus::Vocabulary vocab_;
  std::vector<Sentence> train_;
  std::vector<Sentence> dev_;
  model::ModelParams params_;
  AdamState adam_;
  std::mt19937_64 rng_;
  std::size_t epoch_ = 0;
  std::vector<double> dev_history_;
  std::string metrics_;
};

}  // namespace strae::train
