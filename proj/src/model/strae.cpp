#include "strae/model/strae.hpp"

#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"

namespace strae::model {

namespace {

void require_square(const BoundParams& p, Var m, const char* op) {
  if (m.shape() != diff::Shape{p.n, p.n}) {
    throw ContractError(std::string(op) + ": expected " + std::to_string(p.n) + "x" + std::to_string(p.n) +
                        " operand, got " + diff::to_string(m.shape()));
  }
}

void require_ids(const BoundParams& p, const Tree& tree, std::span<const TokenId> ids) {
  tree.require_binary();
  if (ids.size() != tree.leaf_count()) {
    throw ContractError("token count " + std::to_string(ids.size()) + " does not match tree leaf count " +
                        std::to_string(tree.leaf_count()));
  }
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= p.vocab_size) {
      throw ContractError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                          std::to_string(p.vocab_size));
    }
  }
}

}  // namespace

Var embed_leaf(const BoundParams& p, TokenId token) {
  if (token < 0 || static_cast<std::size_t>(token) >= p.vocab_size) {
    throw ContractError("token id " + std::to_string(token) + " out of range");
  }
  return diff::square(diff::row(p.embedding, static_cast<std::size_t>(token)));
}

Var compose(const BoundParams& p, Var left, Var right) {
  require_square(p, left, "compose");
  require_square(p, right, "compose");
  return diff::tanh(diff::matmul(diff::hcat(left, right), p.composition));
}

std::pair<Var, Var> decompose(const BoundParams& p, Var parent) {
  require_square(p, parent, "decompose");
  return diff::hsplit(diff::tanh(diff::matmul(parent, p.decomposition)));
}

Var index_leaf(const BoundParams& p, Var down) {
  require_square(p, down, "index_leaf");
  Var column = diff::reshape(down, {p.n * p.n, 1});
  Var scores = diff::reshape(diff::matmul(p.embedding, column), {p.vocab_size});
  return diff::softmax(scores);
}

std::vector<Var> encode(const BoundParams& p, const Tree& tree, std::span<const TokenId> ids) {
  require_ids(p, tree, ids);
  std::vector<Var> up(tree.node_count());
  for (NodeId id : tree.postorder()) {
    const auto& node = tree.node(id);
    if (node.is_leaf()) {
      up[id] = embed_leaf(p, ids[node.begin]);
    } else {
      up[id] = compose(p, up[node.children[0]], up[node.children[1]]);
    }
  }
  return up;
}

Decoding decode(const BoundParams& p, const Tree& tree, Var root_up) {
  tree.require_binary();
  require_square(p, root_up, "decode");
  Decoding out;
  out.down.resize(tree.node_count());
  out.recon.resize(tree.leaf_count());
  out.down[tree.root()] = root_up;
  for (NodeId id : tree.preorder()) {
    const auto& node = tree.node(id);
    if (node.is_leaf()) {
      out.recon[node.begin] = index_leaf(p, out.down[id]);
      continue;
    }
    auto [l, r] = decompose(p, out.down[id]);
    out.down[node.children[0]] = l;
    out.down[node.children[1]] = r;
  }
  return out;
}

Decoding iornn_decode(const BoundParams& p, const Tree& tree, std::span<const Var> ups) {
  if (p.architecture != Architecture::iornn) throw ContractError("iornn_decode requires IORNN parameters");
  tree.require_binary();
  if (ups.size() != tree.node_count()) throw ContractError("iornn_decode needs one upward embedding per node");
  Decoding out;
  out.down.resize(tree.node_count());
  out.recon.resize(tree.leaf_count());
  out.down[tree.root()] = p.global_root;
  for (NodeId id : tree.preorder()) {
    const auto& node = tree.node(id);
    if (node.is_leaf()) {
      out.recon[node.begin] = index_leaf(p, out.down[id]);
      continue;
    }
    NodeId l = node.children[0];
    NodeId r = node.children[1];
    Var parent = out.down[id];
    out.down[l] = diff::tanh(diff::matmul(diff::hcat(ups[r], parent), p.decompose_left));
    out.down[r] = diff::tanh(diff::matmul(diff::hcat(ups[l], parent), p.decompose_right));
  }
  return out;
}

std::string to_string(StructureSource s) {
  switch (s) {
    case StructureSource::given:
      return "tree_file";
    case StructureSource::balanced:
      return "balanced";
    case StructureSource::right_branching:
      return "right_branching";
    case StructureSource::induced:
      return "induced";
  }
  return "?";
}

StructureSource parse_structure_source(const std::string& text) {
  if (text == "tree_file" || text == "given") return StructureSource::given;
  if (text == "balanced") return StructureSource::balanced;
  if (text == "right_branching") return StructureSource::right_branching;
  if (text == "induced") return StructureSource::induced;
  throw InputError("unknown structure source: " + text);
}

Tree resolve_structure(std::size_t leaf_count, StructureSource source, const Tree* given) {
  switch (source) {
    case StructureSource::balanced:
      return corpus::balanced_tree(leaf_count);
    case StructureSource::right_branching:
      return corpus::right_branching_tree(leaf_count);
    case StructureSource::given:
      if (!given) throw ContractError("structure source 'tree_file' requires a tree");
      if (given->leaf_count() != leaf_count) {
        throw InputError("given tree has " + std::to_string(given->leaf_count()) + " leaves but the sentence has " +
                         std::to_string(leaf_count) + " tokens");
      }
      given->require_binary();
      return *given;
    case StructureSource::induced:
      break;
  }
  throw ContractError("induced structures are produced by induce_structure");
}

Autoencoding autoencode(const BoundParams& p, std::span<const TokenId> ids, StructureSource source,
                        const Tree* given) {
  if (ids.empty()) throw ContractError("cannot autoencode an empty sentence");
  Autoencoding out;
  if (source == StructureSource::induced) {
    Induction ind = induce_structure(p, ids);
    out.tree = std::move(ind.tree);
    out.nodes.up = std::move(ind.up);
  } else {
    out.tree = resolve_structure(ids.size(), source, given);
    out.nodes.up = encode(p, out.tree, ids);
  }
  Decoding dec = p.architecture == Architecture::iornn ? iornn_decode(p, out.tree, out.nodes.up)
                                                       : decode(p, out.tree, out.nodes.up[out.tree.root()]);
  out.nodes.down = std::move(dec.down);
  out.nodes.recon = std::move(dec.recon);
  return out;
}

std::vector<double> sentence_root(const ModelParams& params, std::span<const TokenId> ids, StructureSource source,
                                  const Tree* given) {
  if (ids.empty()) throw ContractError("cannot embed an empty sentence");
  diff::Tape tape;
  BoundParams p = bind_frozen(tape, params);
  Var root;
  if (source == StructureSource::induced) {
    Induction ind = induce_structure(p, ids);
    root = ind.up[ind.tree.root()];
  } else {
    Tree tree = resolve_structure(ids.size(), source, given);
    root = encode(p, tree, ids)[tree.root()];
  }
  auto v = root.value().data();
  return {v.begin(), v.end()};
}

}  // namespace strae::model
