#include "strae/eval/embeddings_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "strae/error.hpp"
#include "strae/io/atomic_file.hpp"

namespace strae::eval {

void EmbeddingTable::add(std::string token, std::vector<double> vector) {
  if (token.empty() || token.find_first_of(" \t\n\r") != std::string::npos)
    throw InputError("embedding table: token '" + token + "' is empty or contains whitespace");
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) throw ContractError("embedding table: dimension mismatch for '" + token + "'");
  if (!index_.emplace(token, tokens_.size()).second) throw InputError("embedding table: duplicate token '" + token + "'");
  tokens_.push_back(std::move(token));
  vectors_.push_back(std::move(vector));
}

const std::vector<double>& EmbeddingTable::at(const std::string& token, const std::string& fallback) const {
  auto it = index_.find(token);
  if (it == index_.end()) it = index_.find(fallback);
  if (it == index_.end()) throw InputError("embedding table: no vector for '" + token + "'");
  return vectors_[it->second];
}

void EmbeddingTable::save(const std::filesystem::path& path) const {
  std::string out = std::to_string(tokens_.size()) + " " + std::to_string(dim_) + "\n";
  char buf[32];
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    for (double v : vectors_[i]) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::string line;
  std::size_t count = 0, dim = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "%zu %zu", &count, &dim) != 2 || dim == 0)
    throw InputError(path.string() + ":1: expected '<count> <dim>' header");
  EmbeddingTable table(dim);
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    std::vector<double> v;
    v.reserve(dim);
    std::string word;
    while (fields >> word) {
      char* end = nullptr;
      double x = std::strtod(word.c_str(), &end);
      if (*end != '\0') throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad value '" + word + "'");
      v.push_back(x);
    }
    if (v.size() != dim)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim) + " values");
    table.add(std::move(token), std::move(v));
  }
  if (table.size() != count)
    throw InputError(path.string() + ": header says " + std::to_string(count) + " rows, found " +
                     std::to_string(table.size()));
  return table;
}

EmbeddingTable word_table(const model::ModelParams& params, const corpus::Vocabulary& vocab) {
  if (vocab.size() != params.vocab_size) throw ContractError("word_table: vocabulary size differs from model");
  EmbeddingTable table(params.dim());
  for (std::size_t id = 0; id < vocab.size(); ++id)
    table.add(vocab.token(static_cast<corpus::TokenId>(id)), word_embedding(params, vocab, vocab.token(static_cast<corpus::TokenId>(id)), false));
  return table;
}

EmbedFn table_embedder(const EmbeddingTable& table, bool lowercase) {
  return [&table, lowercase](const std::string& w) {
    return table.at(lowercase ? corpus::lowercase_ascii(w) : w, std::string(corpus::kUnkToken));
  };
}

}  // namespace strae::eval
