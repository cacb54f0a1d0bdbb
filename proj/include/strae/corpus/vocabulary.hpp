#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace strae::corpus {

using TokenId = std::int32_t;

inline constexpr std::string_view kUnkToken = "<unk>";

struct TokenizerOptions {
  bool lowercase = true;
};

/// Splits on ASCII whitespace, optionally lowercasing ASCII letters.
/// Bytes outside ASCII are passed through untouched.
std::vector<std::string> tokenize(std::string_view line, const TokenizerOptions& options = {});

/// Reads a one-sentence-per-line file. Blank lines are kept as empty
/// sentences so that line numbers stay aligned with tree files.
std::vector<std::vector<std::string>> read_corpus(const std::filesystem::path& path,
                                                  const TokenizerOptions& options = {});

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Builds from an in-memory corpus. Keeps tokens whose frequency is
  /// strictly greater than `min_freq`, ordered by descending frequency with
  /// lexicographic tie-breaking. The UNK token always has id 0.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences, int min_freq);

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  int min_freq() const { return min_freq_; }
  TokenId unk_id() const { return 0; }

  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::int64_t frequency(TokenId id) const { return frequencies_.at(static_cast<std::size_t>(id)); }

  bool contains(std::string_view token) const;
  /// Id of `token`, or unk_id() when it is out of vocabulary.
  TokenId id(std::string_view token) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.frequencies_ == b.frequencies_ && a.min_freq_ == b.min_freq_;
  }

 private:
  void index();

  std::vector<std::string> tokens_;
  std::vector<std::int64_t> frequencies_;
  std::unordered_map<std::string, TokenId> id_of_;
  int min_freq_ = 0;
};

/// Reads the corpus file and builds its vocabulary. Empty corpora are rejected.
Vocabulary build_vocabulary(const std::filesystem::path& corpus_path, int min_freq,
                            const TokenizerOptions& options = {});

/// Maps tokens to ids; unknown tokens become unk_id. Tokens are lowercased
/// first when `options.lowercase` is set. Empty input is an error.
std::vector<TokenId> encode_sentence(const std::vector<std::string>& sentence, const Vocabulary& vocab,
                                     const TokenizerOptions& options = {});

std::string lowercase_ascii(std::string_view text);

}  // namespace strae::corpus
