#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "strae/diffcore/tensor.hpp"
#include "strae/eval/similarity.hpp"

namespace strae::eval {

enum class ProbeKind { single_sentence, sentence_pair };

std::string to_string(ProbeKind k);

struct ProbeExample {
  std::string text;
  /// Empty for single-sentence tasks.
  std::string text2;
  int label = 0;
};

struct ProbeTask {
  std::string name;
  ProbeKind kind = ProbeKind::single_sentence;
  std::vector<ProbeExample> train;
  std::vector<ProbeExample> dev;
  std::vector<ProbeExample> test;
};

/// Reads "<base>.train", "<base>.dev" and "<base>.test". Each line is
/// "text<TAB>label" or "text1<TAB>text2<TAB>label" with labels in {0, 1};
/// all three files must use the same form.
ProbeTask load_probe_task(const std::filesystem::path& base);

/// Frozen features: one row per example. Pair tasks use hcat(u, v).
struct Features {
  diff::Tensor x;
  std::vector<std::size_t> y;
  std::size_t size() const { return y.size(); }
};

Features featurize(std::span<const ProbeExample> examples, ProbeKind kind, const EmbedFn& embed);

struct ProbeOptions {
  std::size_t hidden = 512;
  double lr = 1e-3;
  std::size_t max_epochs = 100;
  /// Epochs without a dev-accuracy improvement before stopping.
  std::size_t patience = 10;
  std::size_t batch_size = 32;
  std::uint64_t base_seed = 0;
  std::size_t threads = 1;
};

struct ProbeRun {
  std::uint64_t seed = 0;
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t epochs = 0;
};

struct ProbeResult {
  std::vector<ProbeRun> runs;
  /// Mean and population standard deviation of test accuracy, in [0, 1].
  double mean = 0.0;
  double stddev = 0.0;
};

/// Single-sentence: affine(D -> hidden), tanh, affine(hidden -> 2).
/// Pair: affine(D -> 2). Trained with Adam on cross entropy; the weights
/// from the epoch with the best dev accuracy are used for the test split.
/// Each seed draws from its own stream derived from (base_seed, seed).
ProbeResult train_probe(const Features& train, const Features& dev, const Features& test, ProbeKind kind,
                        std::span<const std::uint64_t> seeds, const ProbeOptions& options = {});

ProbeResult train_probe(const ProbeTask& task, const EmbedFn& embed, std::span<const std::uint64_t> seeds,
                        const ProbeOptions& options = {});

inline const std::vector<std::uint64_t> kDefaultProbeSeeds = {0, 1, 2, 3, 4};

}  // namespace strae::eval
