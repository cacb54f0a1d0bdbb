#pragma once

#include <span>
#include <vector>

#include "strae/corpus/vocabulary.hpp"
#include "strae/diffcore/tape.hpp"
#include "strae/model/strae.hpp"

namespace strae::objectives {

using corpus::TokenId;
using diff::Var;

enum class Objective { cross_entropy, contrastive, degenerate };

std::string to_string(Objective o);
Objective parse_objective(const std::string& text);

/// All nodes of a batch, row-aligned: row i of `ups` and row i of `downs`
/// are the upward and downward embeddings of the same structural node.
struct BatchNodes {
  Var ups;    // M x N^2
  Var downs;  // M x N^2
  std::size_t size() const { return ups.value().rows(); }
};

/// Stacks the nodes of several autoencoded sentences, sentence by sentence
/// and node id by node id.
BatchNodes gather_nodes(std::span<const model::Autoencoding> sentences);

/// -(1/T) sum_i log w_hat_i[target_i], with log floored at 1e-12.
Var cross_entropy_loss(std::span<const TokenId> targets, std::span<const Var> recons);

/// Mean of per-sentence cross-entropy losses.
Var batch_cross_entropy(std::span<const model::Autoencoding> sentences,
                        std::span<const std::vector<TokenId>> targets);

struct ContrastiveOptions {
  double tau = 0.2;
  /// Also use up-up (row terms) and down-down (column terms) similarities
  /// as negatives, excluding each node's own entry.
  bool intra_view_negatives = false;
};

/// A = cos(ups, downs);
/// loss = -1/(2M) [ sum_i log softmax_tau(A_i.)_i + sum_j log softmax_tau(A_.j)_j ].
Var contrastive_loss(const BatchNodes& batch, const ContrastiveOptions& options = {});

/// -(1/M) sum_i cos(ups_i, downs_i). Drives every embedding toward one
/// direction; kept to reproduce that collapse.
Var degenerate_similarity_loss(const BatchNodes& batch);

}  // namespace strae::objectives
