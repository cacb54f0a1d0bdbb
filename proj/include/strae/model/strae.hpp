#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "strae/corpus/tree.hpp"
#include "strae/corpus/vocabulary.hpp"
#include "strae/model/params.hpp"

namespace strae::model {

using corpus::NodeId;
using corpus::TokenId;
using corpus::Tree;

// ---- components -----------------------------------------------------------

/// Row `token` of the embedding matrix as an N x N matrix (row-major).
Var embed_leaf(const BoundParams& p, TokenId token);

/// tanh(hcat(left, right) * Phi).
Var compose(const BoundParams& p, Var left, Var right);

/// hsplit(tanh(parent * Theta)) into (left, right).
std::pair<Var, Var> decompose(const BoundParams& p, Var parent);

/// softmax(Psi * flatten(down)): a distribution over the vocabulary.
Var index_leaf(const BoundParams& p, Var down);

// ---- traversals -----------------------------------------------------------

/// Per-node embeddings, indexed by tree node id. `recon` is indexed by
/// token position.
struct NodeEmbeddings {
  std::vector<Var> up;
  std::vector<Var> down;
  std::vector<Var> recon;
};

/// Bottom-up pass: leaves are embedded, internal nodes composed from their
/// children. Returns the upward embedding of every node.
std::vector<Var> encode(const BoundParams& p, const Tree& tree, std::span<const TokenId> ids);

struct Decoding {
  std::vector<Var> down;
  std::vector<Var> recon;
};

/// StrAE top-down pass. The root's downward embedding is `root_up` itself;
/// nothing else from the encoder is read.
Decoding decode(const BoundParams& p, const Tree& tree, Var root_up);

/// IORNN top-down pass: the root's downward embedding is the learned global
/// root, and each child is decoded from its parent's downward embedding
/// concatenated with its sibling's upward embedding:
///   down_l = tanh(hcat(up_r, down_p) * Theta_1)
///   down_r = tanh(hcat(up_l, down_p) * Theta_2)
Decoding iornn_decode(const BoundParams& p, const Tree& tree, std::span<const Var> ups);

// ---- structure ------------------------------------------------------------

enum class StructureSource { given, balanced, right_branching, induced };

std::string to_string(StructureSource s);
/// Accepts "tree_file"/"given", "balanced", "right_branching", "induced".
StructureSource parse_structure_source(const std::string& text);

struct Induction {
  Tree tree;
  /// Upward embeddings indexed by node id of `tree`.
  std::vector<Var> up;
};

/// Self-structuring encode: starting from the leaf embeddings, repeatedly
/// composes the adjacent frontier pair with the highest cosine similarity
/// between flattened upward embeddings (leftmost pair on ties) until one
/// node remains. Leaves are node ids 0..T-1; merge k creates node T+k.
/// Selection is discrete; gradients flow through the chosen compositions.
Induction induce_structure(const BoundParams& p, std::span<const TokenId> ids);

/// Tree for a non-induced source. `given` is required for
/// StructureSource::given and must have one leaf per id.
Tree resolve_structure(std::size_t leaf_count, StructureSource source, const Tree* given = nullptr);

struct Autoencoding {
  Tree tree;
  NodeEmbeddings nodes;
};

/// Resolves the structure, encodes, then decodes with the decoder that
/// matches the bound architecture.
Autoencoding autoencode(const BoundParams& p, std::span<const TokenId> ids, StructureSource source,
                        const Tree* given = nullptr);

/// Flattened root embedding of a sentence, computed without gradients.
std::vector<double> sentence_root(const ModelParams& params, std::span<const TokenId> ids, StructureSource source,
                                  const Tree* given = nullptr);

}  // namespace strae::model
