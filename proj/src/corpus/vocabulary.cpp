#include "strae/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "strae/error.hpp"
#include "strae/io/atomic_file.hpp"

namespace strae::corpus {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::string lowercase_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view line, const TokenizerOptions& options) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) {
      auto token = line.substr(start, i - start);
      tokens.push_back(options.lowercase ? lowercase_ascii(token) : std::string(token));
    }
  }
  return tokens;
}

std::vector<std::vector<std::string>> read_corpus(const std::filesystem::path& path,
                                                  const TokenizerOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file: " + path.string());
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(in, line)) sentences.push_back(tokenize(line, options));
  if (in.bad()) throw InputError("error reading corpus file: " + path.string());
  return sentences;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences, int min_freq) {
  if (min_freq < 0) throw ContractError("min_freq must be non-negative");
  std::map<std::string, std::int64_t, std::less<>> counts;
  std::int64_t total = 0;
  for (const auto& sentence : sentences) {
    for (const auto& token : sentence) {
      ++counts[token];
      ++total;
    }
  }
  if (total == 0) throw InputError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::int64_t>> kept;
  std::int64_t unk_count = 0;
  for (auto& [token, count] : counts) {
    if (count > min_freq && token != kUnkToken) {
      kept.emplace_back(token, count);
    } else {
      unk_count += count;
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.min_freq_ = min_freq;
  vocab.tokens_.emplace_back(kUnkToken);
  vocab.frequencies_.push_back(unk_count);
  for (auto& [token, count] : kept) {
    vocab.tokens_.push_back(token);
    vocab.frequencies_.push_back(count);
  }
  vocab.index();
  return vocab;
}

void Vocabulary::index() {
  id_of_.clear();
  id_of_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [it, inserted] = id_of_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw InputError("duplicate vocabulary token: " + tokens_[i]);
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractError("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return id_of_.count(std::string(token)) > 0; }

TokenId Vocabulary::id(std::string_view token) const {
  auto it = id_of_.find(std::string(token));
  return it == id_of_.end() ? unk_id() : it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << "#V=" << tokens_.size() << " minfreq=" << min_freq_ << " unk=" << kUnkToken << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i] << '\t' << i << '\t' << frequencies_[i] << '\n';
  }
  io::write_file_atomic(path, out.str());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocabulary file: " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw InputError("empty vocabulary file: " + path.string());

  std::size_t declared = 0;
  int min_freq = 0;
  std::string unk;
  {
    std::istringstream hs(header);
    std::string field;
    bool have_v = false, have_mf = false, have_unk = false;
    while (hs >> field) {
      if (field.rfind("#V=", 0) == 0) {
        declared = std::stoul(field.substr(3));
        have_v = true;
      } else if (field.rfind("minfreq=", 0) == 0) {
        min_freq = std::stoi(field.substr(8));
        have_mf = true;
      } else if (field.rfind("unk=", 0) == 0) {
        unk = field.substr(4);
        have_unk = true;
      }
    }
    if (!have_v || !have_mf || !have_unk) {
      throw InputError("malformed vocabulary header in " + path.string() + ": " + header);
    }
  }

  Vocabulary vocab;
  vocab.min_freq_ = min_freq;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected token<TAB>id<TAB>frequency");
    }
    std::size_t id = std::stoul(line.substr(t1 + 1, t2 - t1 - 1));
    if (id != vocab.tokens_.size()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": ids must be dense and ordered");
    }
    vocab.tokens_.push_back(line.substr(0, t1));
    vocab.frequencies_.push_back(std::stoll(line.substr(t2 + 1)));
  }
  if (vocab.tokens_.size() != declared) {
    throw InputError(path.string() + ": header declares V=" + std::to_string(declared) + " but file has " +
                     std::to_string(vocab.tokens_.size()) + " entries");
  }
  if (vocab.tokens_.empty() || vocab.tokens_.front() != unk) {
    throw InputError(path.string() + ": the UNK token must have id 0");
  }
  vocab.index();
  return vocab;
}

Vocabulary build_vocabulary(const std::filesystem::path& corpus_path, int min_freq,
                            const TokenizerOptions& options) {
  return Vocabulary::build(read_corpus(corpus_path, options), min_freq);
}

std::vector<TokenId> encode_sentence(const std::vector<std::string>& sentence, const Vocabulary& vocab,
                                     const TokenizerOptions& options) {
  if (sentence.empty()) throw ContractError("cannot encode an empty sentence");
  std::vector<TokenId> ids;
  ids.reserve(sentence.size());
  for (const auto& token : sentence) {
    ids.push_back(options.lowercase ? vocab.id(lowercase_ascii(token)) : vocab.id(token));
  }
  return ids;
}

}  // namespace strae::corpus
