#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace strae::corpus {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct TreeNode {
  /// Half-open span [begin, end) over token positions.
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<NodeId> children;
  NodeId parent = kNoNode;

  bool is_leaf() const { return children.empty(); }
  std::size_t width() const { return end - begin; }
};

/// Constituency structure over a token sequence. Node ids are dense in
/// [0, node_count()); the constructor checks span consistency. Trees coming
/// from the bracket parser may contain unary and n-ary nodes; every model
/// computation requires is_binary().
class Tree {
 public:
  Tree() = default;
  /// Parents are derived from children; any stored parent is overwritten.
  Tree(std::vector<TreeNode> nodes, NodeId root);

  std::size_t leaf_count() const { return leaf_at_.size(); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t internal_count() const { return nodes_.size() - leaf_at_.size(); }
  NodeId root() const { return root_; }

  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  bool is_leaf(NodeId id) const { return node(id).is_leaf(); }

  NodeId left(NodeId id) const;
  NodeId right(NodeId id) const;
  /// Leaf node covering token position `position`.
  NodeId leaf_at(std::size_t position) const { return leaf_at_.at(position); }

  /// Strictly binary with T-1 internal nodes.
  bool is_binary() const;
  /// Throws ContractError unless every binary-tree invariant holds.
  void require_binary() const;

  /// Children before parents.
  std::vector<NodeId> postorder() const;
  /// Parents before children, left subtree before right.
  std::vector<NodeId> preorder() const;

  /// Maximum root-to-leaf edge count.
  std::size_t depth() const;

  /// Label-independent shape, e.g. "((..).)" for a left-branching 3-leaf tree.
  std::string shape() const;

  friend bool operator==(const Tree& a, const Tree& b) { return a.root_ == b.root_ && a.nodes_ == b.nodes_; }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<NodeId> leaf_at_;
  NodeId root_ = kNoNode;
};

inline bool operator==(const TreeNode& a, const TreeNode& b) {
  return a.begin == b.begin && a.end == b.end && a.children == b.children && a.parent == b.parent;
}

/// Same bracketing regardless of node numbering.
bool structurally_equal(const Tree& a, const Tree& b);

/// Incrementally assembles a tree: leaves take consecutive token positions
/// in the order they are added; internal nodes must join adjacent spans.
class TreeBuilder {
 public:
  NodeId add_leaf();
  NodeId add_node(std::vector<NodeId> children);
  NodeId add_node(NodeId left, NodeId right) { return add_node(std::vector<NodeId>{left, right}); }
  Tree build(NodeId root) &&;
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<TreeNode> nodes_;
  std::size_t next_position_ = 0;
};

/// Renumbers nodes so leaves are 0..T-1 in token order and internal nodes
/// follow in postorder.
Tree canonicalize(const Tree& tree);

/// Strictly binary tree over the same leaves: unary chains collapse, and
/// each n-ary node expands right-branching within its span. Idempotent.
Tree binarize(const Tree& tree);

/// Recursive midpoint split; the left child receives the first ceil(T/2) leaves.
Tree balanced_tree(std::size_t leaf_count);

/// Leaf i composes with the subtree over leaves i+1..T.
Tree right_branching_tree(std::size_t leaf_count);

}  // namespace strae::corpus
