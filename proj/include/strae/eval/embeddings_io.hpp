#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "strae/eval/similarity.hpp"

namespace strae::eval {

/// Token -> vector table in the common text format: a "<count> <dim>"
/// header, then "token v1 ... v_dim" per line.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  void add(std::string token, std::vector<double> vector);

  std::size_t size() const { return tokens_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  /// Vector of `token`, or of `fallback` when absent. Throws InputError
  /// when neither is present.
  const std::vector<double>& at(const std::string& token, const std::string& fallback = "<unk>") const;

  /// Values are written with 17 significant digits so import is exact.
  void save(const std::filesystem::path& path) const;
  static EmbeddingTable load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<std::vector<double>> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Psi rows for every vocabulary entry, in id order.
EmbeddingTable word_table(const model::ModelParams& params, const corpus::Vocabulary& vocab);

/// Word embedder over an imported table; tokens are lowercased first when
/// `lowercase` is set.
EmbedFn table_embedder(const EmbeddingTable& table, bool lowercase = true);

}  // namespace strae::eval
