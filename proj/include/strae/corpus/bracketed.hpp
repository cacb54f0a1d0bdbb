#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "strae/corpus/tree.hpp"
#include "strae/error.hpp"

namespace strae::corpus {

class ParseError : public InputError {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : InputError(message + " at offset " + std::to_string(offset)), offset_(offset) {}
  /// Re-raises `inner` with a location prefix such as "file:line: ".
  ParseError(const std::string& prefix, const ParseError& inner)
      : InputError(prefix + inner.what()), offset_(inner.offset_) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct ParsedTree {
  Tree tree;
  std::vector<std::string> tokens;
};

/// Parses one bracketed expression, e.g. "(S (NP the cat) (VP sat))".
/// A bare token directly after '(' that is followed by further elements is
/// a constituent label and is discarded; a lone token "(a)" is a leaf.
/// Unary and n-ary nodes are kept as written.
ParsedTree parse_bracketed_tree(std::string_view line);

/// Inverse of the parser for binary or n-ary trees. Internal nodes are
/// written with the label "X"; a single-leaf tree is written "(tok)".
/// When `tokens` is empty, 1-based leaf positions are used as tokens.
std::string to_bracketed(const Tree& tree, const std::vector<std::string>& tokens = {});

/// Reads one tree per line; every tree is binarized. Blank lines are errors.
std::vector<ParsedTree> read_tree_file(const std::filesystem::path& path);

}  // namespace strae::corpus
