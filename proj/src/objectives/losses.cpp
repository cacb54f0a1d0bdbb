#include "strae/objectives/losses.hpp"

#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"

namespace strae::objectives {

namespace {
// Large enough that exp(value / tau) underflows to zero for any sane tau.
constexpr double kMasked = -1e30;
}  // namespace

std::string to_string(Objective o) {
  switch (o) {
    case Objective::cross_entropy:
      return "cross_entropy";
    case Objective::contrastive:
      return "contrastive";
    case Objective::degenerate:
      return "degenerate";
  }
  return "?";
}

Objective parse_objective(const std::string& text) {
  if (text == "cross_entropy" || text == "ce") return Objective::cross_entropy;
  if (text == "contrastive") return Objective::contrastive;
  if (text == "degenerate") return Objective::degenerate;
  throw InputError("unknown objective: " + text);
}

BatchNodes gather_nodes(std::span<const model::Autoencoding> sentences) {
  std::vector<Var> ups, downs;
  for (const auto& s : sentences) {
    if (s.nodes.up.size() != s.nodes.down.size()) throw ContractError("sentence has unmatched up/down embeddings");
    ups.insert(ups.end(), s.nodes.up.begin(), s.nodes.up.end());
    downs.insert(downs.end(), s.nodes.down.begin(), s.nodes.down.end());
  }
  if (ups.empty()) throw ContractError("batch has no nodes");
  return {diff::stack_rows(ups), diff::stack_rows(downs)};
}

Var cross_entropy_loss(std::span<const TokenId> targets, std::span<const Var> recons) {
  if (targets.size() != recons.size()) {
    throw ContractError("cross_entropy_loss: " + std::to_string(targets.size()) + " targets but " +
                        std::to_string(recons.size()) + " reconstructions");
  }
  if (targets.empty()) throw ContractError("cross_entropy_loss: no leaves");
  std::vector<Var> terms;
  terms.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    terms.push_back(diff::log(diff::element(recons[i], static_cast<std::size_t>(targets[i]))));
  }
  Var total = diff::add_n(terms);
  return diff::scale(total, -1.0 / static_cast<double>(targets.size()));
}

Var batch_cross_entropy(std::span<const model::Autoencoding> sentences,
                        std::span<const std::vector<TokenId>> targets) {
  if (sentences.size() != targets.size() || sentences.empty()) {
    throw ContractError("batch_cross_entropy: sentence/target count mismatch");
  }
  std::vector<Var> per_sentence;
  per_sentence.reserve(sentences.size());
  for (std::size_t j = 0; j < sentences.size(); ++j) {
    per_sentence.push_back(cross_entropy_loss(targets[j], sentences[j].nodes.recon));
  }
  return diff::scale(diff::add_n(per_sentence), 1.0 / static_cast<double>(per_sentence.size()));
}

Var contrastive_loss(const BatchNodes& batch, const ContrastiveOptions& options) {
  if (!(options.tau > 0.0)) throw ContractError("contrastive_loss: temperature must be positive");
  const std::size_t m = batch.size();
  if (m == 0) throw ContractError("contrastive_loss: empty batch");
  Var a = diff::cosine_similarity_matrix(batch.ups, batch.downs);
  Var row_terms, col_terms;
  if (!options.intra_view_negatives) {
    row_terms = diff::diagonal_log_softmax(a, options.tau, diff::Axis::rows);
    col_terms = diff::diagonal_log_softmax(a, options.tau, diff::Axis::cols);
  } else {
    Var uu = diff::mask_diagonal(diff::cosine_similarity_matrix(batch.ups, batch.ups), kMasked);
    Var dd = diff::mask_diagonal(diff::cosine_similarity_matrix(batch.downs, batch.downs), kMasked);
    row_terms = diff::diagonal_log_softmax(diff::hcat(a, uu), options.tau, diff::Axis::rows);
    col_terms = diff::diagonal_log_softmax(diff::hcat(diff::transpose(a), dd), options.tau, diff::Axis::rows);
  }
  Var total = diff::add(diff::sum(row_terms), diff::sum(col_terms));
  return diff::scale(total, -1.0 / (2.0 * static_cast<double>(m)));
}

Var degenerate_similarity_loss(const BatchNodes& batch) {
  return diff::scale(diff::mean(diff::rowwise_cosine(batch.ups, batch.downs)), -1.0);
}

}  // namespace strae::objectives
