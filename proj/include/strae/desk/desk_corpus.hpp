#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strae/eval/similarity.hpp"

namespace strae::desk {

/// A small phrase-structure grammar over topic-coupled lexicons: subject,
/// verb, object and modifiers of a sentence usually share a topic, so word
/// co-occurrence carries both category and topic signal.
struct Grammar {
  struct Topic {
    std::string name;
    std::vector<std::string> nouns;
    std::vector<std::string> verbs;
    std::vector<std::string> adjectives;
  };
  std::vector<Topic> topics;
  std::vector<std::string> determiners;
  std::vector<std::string> prepositions;
  std::vector<std::string> adverbs;

  /// Probability that a noun phrase is drawn from a different topic.
  double topic_noise = 0.15;
  /// Probabilities of optional constituents.
  double p_determiner = 0.8;
  double p_adjective = 0.35;
  double p_pp = 0.0;
  double p_adverb = 0.1;
  /// Probability that a noun phrase carries a relative clause
  /// ("the dog that chases a cat").
  double p_relative = 0.0;
  /// Probability of joining another clause with "and".
  double p_coordination = 0.0;
  /// Maximum prepositional-phrase / relative-clause nesting.
  int max_pp_depth = 0;
};

/// Short sentences (3 to 6 tokens) over roughly one hundred words.
Grammar tiny_grammar();
/// Longer sentences with prepositional phrases over a larger lexicon.
Grammar full_grammar();

struct Corpus {
  std::vector<std::string> sentences;
  /// Labelled bracketed parse of each sentence, e.g.
  /// "(S (NP the dog) (VP chases (NP a fox)))".
  std::vector<std::string> trees;
};

Corpus generate(const Grammar& grammar, std::size_t count, std::uint64_t seed);

struct WordSimilarityOptions {
  std::size_t window = 2;
  std::size_t pairs = 400;
  /// Words occurring fewer times are not sampled.
  std::size_t min_count = 20;
  std::uint64_t seed = 0;
};

/// Word-pair task whose gold score is the cosine between positive PMI
/// co-occurrence vectors (symmetric window) computed over `sentences`.
eval::SimilarityTask word_similarity_task(const std::vector<std::string>& sentences,
                                          const WordSimilarityOptions& options = {});

}  // namespace strae::desk
