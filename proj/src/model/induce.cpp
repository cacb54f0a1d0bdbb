#include <limits>

#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"
#include "strae/model/strae.hpp"

namespace strae::model {

Induction induce_structure(const BoundParams& p, std::span<const TokenId> ids) {
  if (ids.empty()) throw ContractError("induce_structure requires at least one token");
  const std::size_t t = ids.size();

  corpus::TreeBuilder builder;
  std::vector<Var> up;
  up.reserve(2 * t - 1);
  // Frontier entries are node ids; their order is token order.
  std::vector<NodeId> frontier;
  frontier.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    frontier.push_back(builder.add_leaf());
    up.push_back(embed_leaf(p, ids[i]));
  }

  // Every step rescans all adjacent pairs against the current embeddings.
  while (frontier.size() > 1) {
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < frontier.size(); ++k) {
      double sim = diff::cosine(up[frontier[k]].value().data(), up[frontier[k + 1]].value().data());
      if (sim > best_sim) {
        best_sim = sim;
        best = k;
      }
    }
    NodeId l = frontier[best], r = frontier[best + 1];
    NodeId merged = builder.add_node(l, r);
    up.push_back(compose(p, up[l], up[r]));
    frontier[best] = merged;
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(best) + 1);
  }

  Induction out;
  out.tree = std::move(builder).build(frontier.front());
  out.up = std::move(up);
  return out;
}

}  // namespace strae::model
