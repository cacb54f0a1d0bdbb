#include "strae/corpus/tree.hpp"

#include <algorithm>
#include <functional>

#include "strae/error.hpp"

namespace strae::corpus {

Tree::Tree(std::vector<TreeNode> nodes, NodeId root) : nodes_(std::move(nodes)), root_(root) {
  if (nodes_.empty()) throw ContractError("tree has no nodes");
  if (root_ >= nodes_.size()) throw ContractError("tree root id out of range");
  for (auto& n : nodes_) n.parent = kNoNode;

  std::vector<int> seen(nodes_.size(), 0);
  std::vector<NodeId> stack{root_};
  seen[root_] = 1;
  std::size_t leaves = 0;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    TreeNode& n = nodes_[id];
    if (n.end <= n.begin) throw ContractError("tree node " + std::to_string(id) + " has an empty span");
    if (n.is_leaf()) {
      if (n.width() != 1) throw ContractError("leaf " + std::to_string(id) + " must span exactly one token");
      ++leaves;
      continue;
    }
    std::size_t cursor = n.begin;
    for (NodeId c : n.children) {
      if (c >= nodes_.size()) throw ContractError("child id out of range in node " + std::to_string(id));
      if (seen[c]++) throw ContractError("node " + std::to_string(c) + " has more than one parent");
      const TreeNode& child = nodes_[c];
      if (child.begin != cursor) {
        throw ContractError("children of node " + std::to_string(id) + " do not tile its span");
      }
      cursor = child.end;
      nodes_[c].parent = id;
      stack.push_back(c);
    }
    if (cursor != n.end) throw ContractError("children of node " + std::to_string(id) + " do not tile its span");
  }
  if (std::any_of(seen.begin(), seen.end(), [](int s) { return s == 0; })) {
    throw ContractError("tree contains nodes unreachable from the root");
  }
  const TreeNode& r = nodes_[root_];
  if (r.begin != 0 || r.end != leaves) throw ContractError("root span must cover [0, leaf_count)");

  leaf_at_.assign(leaves, kNoNode);
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].is_leaf()) leaf_at_[nodes_[id].begin] = id;
  }
}

NodeId Tree::left(NodeId id) const {
  const auto& n = node(id);
  if (n.children.size() != 2) throw ContractError("left() requires a binary internal node");
  return n.children[0];
}

NodeId Tree::right(NodeId id) const {
  const auto& n = node(id);
  if (n.children.size() != 2) throw ContractError("right() requires a binary internal node");
  return n.children[1];
}

bool Tree::is_binary() const {
  if (nodes_.size() != 2 * leaf_count() - 1) return false;
  return std::all_of(nodes_.begin(), nodes_.end(),
                     [](const TreeNode& n) { return n.children.empty() || n.children.size() == 2; });
}

void Tree::require_binary() const {
  if (nodes_.empty()) throw ContractError("empty tree");
  if (!is_binary()) throw ContractError("tree is not strictly binary (binarize it first)");
}

std::vector<NodeId> Tree::postorder() const {
  std::vector<NodeId> order;
  order.reserve(nodes_.size());
  std::vector<std::pair<NodeId, std::size_t>> stack{{root_, 0}};
  while (!stack.empty()) {
    auto& [id, next] = stack.back();
    const auto& n = nodes_[id];
    if (next < n.children.size()) {
      NodeId child = n.children[next++];
      stack.emplace_back(child, 0);
    } else {
      order.push_back(id);
      stack.pop_back();
    }
  }
  return order;
}

std::vector<NodeId> Tree::preorder() const {
  std::vector<NodeId> order;
  order.reserve(nodes_.size());
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const auto& ch = nodes_[id].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (NodeId id : preorder()) {
    if (nodes_[id].parent != kNoNode) d[id] = d[nodes_[id].parent] + 1;
    best = std::max(best, d[id]);
  }
  return best;
}

std::string Tree::shape() const {
  std::string out;
  std::function<void(NodeId)> emit = [&](NodeId id) {
    const auto& n = nodes_[id];
    if (n.is_leaf()) {
      out += '.';
      return;
    }
    out += '(';
    for (NodeId c : n.children) emit(c);
    out += ')';
  };
  emit(root_);
  return out;
}

bool structurally_equal(const Tree& a, const Tree& b) {
  return a.leaf_count() == b.leaf_count() && a.shape() == b.shape();
}

NodeId TreeBuilder::add_leaf() {
  TreeNode n;
  n.begin = next_position_;
  n.end = ++next_position_;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId TreeBuilder::add_node(std::vector<NodeId> children) {
  if (children.empty()) throw ContractError("internal node needs at least one child");
  TreeNode n;
  n.begin = nodes_.at(children.front()).begin;
  n.end = nodes_.at(children.back()).end;
  n.children = std::move(children);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tree TreeBuilder::build(NodeId root) && { return Tree(std::move(nodes_), root); }

Tree canonicalize(const Tree& tree) {
  std::vector<NodeId> remap(tree.node_count(), kNoNode);
  NodeId next = 0;
  for (std::size_t p = 0; p < tree.leaf_count(); ++p) remap[tree.leaf_at(p)] = next++;
  auto order = tree.postorder();
  for (NodeId id : order) {
    if (!tree.is_leaf(id)) remap[id] = next++;
  }
  std::vector<TreeNode> nodes(tree.node_count());
  for (NodeId id = 0; id < tree.node_count(); ++id) {
    TreeNode n = tree.node(id);
    for (auto& c : n.children) c = remap[c];
    nodes[remap[id]] = std::move(n);
  }
  return Tree(std::move(nodes), remap[tree.root()]);
}

Tree binarize(const Tree& tree) {
  TreeBuilder builder;
  std::vector<NodeId> built(tree.node_count(), kNoNode);
  // Leaves first so that builder positions match token positions.
  for (std::size_t p = 0; p < tree.leaf_count(); ++p) built[tree.leaf_at(p)] = builder.add_leaf();
  for (NodeId id : tree.postorder()) {
    const auto& n = tree.node(id);
    if (n.is_leaf()) continue;
    if (n.children.size() == 1) {
      built[id] = built[n.children[0]];
      continue;
    }
    NodeId acc = built[n.children.back()];
    for (std::size_t k = n.children.size() - 1; k-- > 0;) acc = builder.add_node(built[n.children[k]], acc);
    built[id] = acc;
  }
  return std::move(builder).build(built[tree.root()]);
}

Tree balanced_tree(std::size_t leaf_count) {
  if (leaf_count == 0) throw ContractError("balanced_tree requires at least one leaf");
  TreeBuilder builder;
  for (std::size_t i = 0; i < leaf_count; ++i) builder.add_leaf();
  std::function<NodeId(std::size_t, std::size_t)> split = [&](std::size_t begin, std::size_t end) -> NodeId {
    if (end - begin == 1) return static_cast<NodeId>(begin);
    std::size_t mid = begin + (end - begin + 1) / 2;
    NodeId l = split(begin, mid);
    NodeId r = split(mid, end);
    return builder.add_node(l, r);
  };
  NodeId root = split(0, leaf_count);
  return std::move(builder).build(root);
}

Tree right_branching_tree(std::size_t leaf_count) {
  if (leaf_count == 0) throw ContractError("right_branching_tree requires at least one leaf");
  TreeBuilder builder;
  for (std::size_t i = 0; i < leaf_count; ++i) builder.add_leaf();
  NodeId acc = static_cast<NodeId>(leaf_count - 1);
  for (std::size_t i = leaf_count - 1; i-- > 0;) acc = builder.add_node(static_cast<NodeId>(i), acc);
  return std::move(builder).build(acc);
}

}  // namespace strae::corpus
