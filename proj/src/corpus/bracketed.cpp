#include "strae/corpus/bracketed.hpp"

#include <fstream>

namespace strae::corpus {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Intermediate n-ary node produced while scanning; leaves carry a token.
struct RawNode {
  std::string token;
  std::vector<RawNode> children;
  std::size_t offset = 0;
};

class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  RawNode parse() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("empty tree expression", pos_);
    if (text_[pos_] != '(') throw ParseError("expected '('", pos_);
    RawNode root = parse_bracket();
    skip_space();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return root;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  std::string read_token() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')') ++pos_;
    if (pos_ == start) throw ParseError("malformed token", start);
    return std::string(text_.substr(start, pos_ - start));
  }

  // Called with pos_ at '('; returns after the matching ')'.
  RawNode parse_bracket() {
    RawNode node;
    node.offset = pos_;
    ++pos_;
    std::vector<RawNode> items;
    std::vector<bool> bare;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses: missing ')'", node.offset);
      char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        items.push_back(parse_bracket());
        bare.push_back(false);
      } else {
        RawNode leaf;
        leaf.offset = pos_;
        leaf.token = read_token();
        items.push_back(std::move(leaf));
        bare.push_back(true);
      }
    }
    if (items.empty()) throw ParseError("constituent has zero leaves", node.offset);
    if (items.size() == 1 && bare[0]) return std::move(items[0]);
    std::size_t first = (bare[0] && items.size() > 1) ? 1 : 0;  // leading label
    for (std::size_t i = first; i < items.size(); ++i) node.children.push_back(std::move(items[i]));
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

NodeId emit(const RawNode& raw, TreeBuilder& builder, std::vector<std::string>& tokens) {
  if (raw.children.empty()) {
    tokens.push_back(raw.token);
    return builder.add_leaf();
  }
  std::vector<NodeId> kids;
  kids.reserve(raw.children.size());
  for (const auto& c : raw.children) kids.push_back(emit(c, builder, tokens));
  return builder.add_node(std::move(kids));
}

void write(const Tree& tree, NodeId id, const std::vector<std::string>& tokens, std::string& out) {
  const auto& n = tree.node(id);
  if (n.is_leaf()) {
    out += tokens.empty() ? std::to_string(n.begin + 1) : tokens.at(n.begin);
    return;
  }
  out += "(X";
  for (NodeId c : n.children) {
    out += ' ';
    write(tree, c, tokens, out);
  }
  out += ')';
}

}  // namespace

ParsedTree parse_bracketed_tree(std::string_view line) {
  RawNode raw = Scanner(line).parse();
  ParsedTree parsed;
  TreeBuilder builder;
  NodeId root = emit(raw, builder, parsed.tokens);
  parsed.tree = std::move(builder).build(root);
  return parsed;
}

std::string to_bracketed(const Tree& tree, const std::vector<std::string>& tokens) {
  if (!tokens.empty() && tokens.size() != tree.leaf_count()) {
    throw ContractError("token count does not match tree leaf count");
  }
  std::string out;
  if (tree.leaf_count() == 1 && tree.is_leaf(tree.root())) {
    out += '(';
    write(tree, tree.root(), tokens, out);
    out += ')';
    return out;
  }
  write(tree, tree.root(), tokens, out);
  return out;
}

std::vector<ParsedTree> read_tree_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open tree file: " + path.string());
  std::vector<ParsedTree> trees;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      ParsedTree parsed = parse_bracketed_tree(line);
      parsed.tree = binarize(parsed.tree);
      trees.push_back(std::move(parsed));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": ", e);
    }
  }
  return trees;
}

}  // namespace strae::corpus
