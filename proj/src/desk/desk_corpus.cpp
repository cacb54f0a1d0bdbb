#include "strae/desk/desk_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "strae/corpus/vocabulary.hpp"
#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"

namespace strae::desk {

namespace {

using Words = std::vector<std::string>;

Grammar::Topic topic(std::string name, Words nouns, Words verbs, Words adjectives) {
  return {std::move(name), std::move(nouns), std::move(verbs), std::move(adjectives)};
}

struct Phrase {
  Words words;
  std::string tree;
};

class Generator {
 public:
  Generator(const Grammar& g, std::uint64_t seed) : g_(g), rng_(seed) {}

  Phrase sentence() {
    Phrase s = clause();
    if (chance(g_.p_coordination)) s = join("S", {s, leaf("and"), clause()});
    return s;
  }

 private:
  double unit() { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }
  const std::string& pick(const Words& w) { return w[rng_() % w.size()]; }

  std::size_t maybe_drift(std::size_t t) {
    return chance(g_.topic_noise) ? static_cast<std::size_t>(rng_() % g_.topics.size()) : t;
  }

  Phrase clause() {
    std::size_t t = rng_() % g_.topics.size();
    Phrase np = noun_phrase(t, 0);
    Phrase vp = verb_phrase(t, 0);
    return join("S", {np, vp});
  }

  static Phrase leaf(const std::string& w) { return {{w}, w}; }

  static Phrase join(const char* label, const std::vector<Phrase>& parts) {
    Phrase out;
    out.tree = std::string("(") + label;
    for (const auto& p : parts) {
      out.words.insert(out.words.end(), p.words.begin(), p.words.end());
      out.tree += " " + p.tree;
    }
    out.tree += ")";
    return out;
  }

  Phrase noun_phrase(std::size_t t, int depth) {
    t = maybe_drift(t);
    const auto& tp = g_.topics[t];
    std::vector<Phrase> parts;
    if (chance(g_.p_determiner)) parts.push_back(leaf(pick(g_.determiners)));
    if (chance(g_.p_adjective)) parts.push_back(leaf(pick(tp.adjectives)));
    parts.push_back(leaf(pick(tp.nouns)));
    Phrase np = join("NP", parts);
    if (depth < g_.max_pp_depth && chance(g_.p_pp)) np = join("NP", {np, prep_phrase(t, depth + 1)});
    if (depth < g_.max_pp_depth && chance(g_.p_relative))
      np = join("NP", {np, join("SBAR", {leaf("that"), verb_phrase(t, depth + 1)})});
    return np;
  }

  Phrase prep_phrase(std::size_t t, int depth) {
    return join("PP", {leaf(pick(g_.prepositions)), noun_phrase(t, depth)});
  }

  Phrase verb_phrase(std::size_t t, int depth) {
    Phrase vp = join("VP", {leaf(pick(g_.topics[t].verbs)), noun_phrase(t, depth)});
    if (depth < g_.max_pp_depth && chance(g_.p_pp)) vp = join("VP", {vp, prep_phrase(t, depth + 1)});
    if (chance(g_.p_adverb)) vp = join("VP", {vp, leaf(pick(g_.adverbs))});
    return vp;
  }

  const Grammar& g_;
  std::mt19937_64 rng_;
};

std::string join_words(const Words& w) {
  std::string out;
  for (const auto& x : w) {
    if (!out.empty()) out += ' ';
    out += x;
  }
  return out;
}

}  // namespace

Grammar tiny_grammar() {
  Grammar g;
  g.topics = {
      topic("animals", {"dog", "cat", "horse", "bird", "fox", "wolf", "mouse", "rabbit"},
            {"chases", "bites", "feeds", "watches", "hunts"}, {"furry", "wild", "tame", "small"}),
      topic("food", {"bread", "apple", "cheese", "soup", "cake", "rice", "fish", "pie"},
            {"eats", "cooks", "bakes", "tastes", "serves"}, {"fresh", "sweet", "warm", "ripe"}),
      topic("tools", {"hammer", "saw", "knife", "drill", "rope", "nail", "axe", "shovel"},
            {"uses", "sharpens", "repairs", "holds", "breaks"}, {"heavy", "sharp", "rusty", "new"}),
      topic("places", {"house", "river", "forest", "city", "garden", "road", "field", "village"},
            {"visits", "builds", "crosses", "leaves", "paints"}, {"old", "quiet", "green", "distant"}),
      topic("people", {"man", "woman", "child", "farmer", "teacher", "doctor", "king", "sailor"},
            {"meets", "helps", "calls", "follows", "teaches"}, {"kind", "tall", "young", "brave"}),
  };
  g.determiners = {"the", "a", "every", "some"};
  g.prepositions = {"in", "on", "with", "near"};
  g.adverbs = {"quickly", "slowly", "often"};
  g.p_determiner = 0.4;
  g.p_adjective = 0.25;
  g.p_adverb = 0.1;
  g.max_pp_depth = 0;
  return g;
}

Grammar full_grammar() {
  Grammar g = tiny_grammar();
  auto extra = std::vector<Grammar::Topic>{
      topic("weather", {"rain", "storm", "wind", "snow", "cloud", "sun", "fog", "frost"},
            {"soaks", "floods", "freezes", "covers", "hides"}, {"cold", "dark", "bright", "wet"}),
      topic("music", {"song", "drum", "violin", "piano", "choir", "flute", "guitar", "band"},
            {"plays", "hears", "sings", "tunes", "records"}, {"loud", "soft", "happy", "sad"}),
      topic("sea", {"boat", "ship", "wave", "shore", "harbor", "anchor", "sail", "island"},
            {"sails", "anchors", "steers", "sinks", "docks"}, {"salty", "deep", "calm", "stormy"}),
  };
  g.topics.insert(g.topics.end(), extra.begin(), extra.end());
  g.prepositions = {"in", "on", "with", "near", "under", "behind", "across", "beside"};
  g.adverbs = {"quickly", "slowly", "often", "rarely", "carefully", "gladly"};
  g.p_determiner = 0.8;
  g.p_adjective = 0.4;
  g.p_pp = 0.35;
  g.p_adverb = 0.15;
  g.p_relative = 0.2;
  g.p_coordination = 0.3;
  g.max_pp_depth = 3;
  return g;
}

Corpus generate(const Grammar& grammar, std::size_t count, std::uint64_t seed) {
  if (grammar.topics.empty() || grammar.determiners.empty() || grammar.adverbs.empty() ||
      (grammar.max_pp_depth > 0 && grammar.prepositions.empty()))
    throw ContractError("desk grammar: empty lexicon");
  Generator gen(grammar, seed);
  Corpus c;
  c.sentences.reserve(count);
  c.trees.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Phrase s = gen.sentence();
    c.sentences.push_back(join_words(s.words));
    c.trees.push_back(std::move(s.tree));
  }
  return c;
}

eval::SimilarityTask word_similarity_task(const std::vector<std::string>& sentences,
                                          const WordSimilarityOptions& options) {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> encoded;
  for (const auto& s : sentences) {
    std::vector<std::size_t> ids;
    for (const auto& w : corpus::tokenize(s)) ids.push_back(index.emplace(w, index.size()).first->second);
    encoded.push_back(std::move(ids));
  }
  const std::size_t v = index.size();
  std::vector<double> counts(v * v, 0.0);
  std::vector<std::size_t> freq(v, 0);
  for (const auto& ids : encoded)
    for (std::size_t i = 0; i < ids.size(); ++i) {
      ++freq[ids[i]];
      std::size_t lo = i >= options.window ? i - options.window : 0;
      std::size_t hi = std::min(ids.size(), i + options.window + 1);
      for (std::size_t j = lo; j < hi; ++j)
        if (j != i) counts[ids[i] * v + ids[j]] += 1.0;
    }

  std::vector<double> row(v, 0.0), col(v, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = 0; b < v; ++b) {
      row[a] += counts[a * v + b];
      col[b] += counts[a * v + b];
      total += counts[a * v + b];
    }
  std::vector<double> ppmi(v * v, 0.0);
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = 0; b < v; ++b) {
      double c = counts[a * v + b];
      if (c > 0.0) ppmi[a * v + b] = std::max(0.0, std::log(c * total / (row[a] * col[b])));
    }

  std::vector<std::string> words(v);
  for (const auto& [w, id] : index) words[id] = w;
  std::vector<std::size_t> candidates;
  for (std::size_t id = 0; id < v; ++id)
    if (freq[id] >= options.min_count) candidates.push_back(id);
  std::sort(candidates.begin(), candidates.end(), [&](auto a, auto b) { return words[a] < words[b]; });
  std::size_t possible = candidates.size() * (candidates.size() - (candidates.empty() ? 0 : 1)) / 2;
  if (possible < 2) throw InputError("word similarity: too few frequent words");

  std::mt19937_64 rng(options.seed);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  eval::SimilarityTask task;
  task.kind = eval::TaskKind::word;
  task.name = "desk_wordsim";
  std::size_t want = std::min(options.pairs, possible);
  while (task.pairs.size() < want) {
    std::size_t a = candidates[rng() % candidates.size()];
    std::size_t b = candidates[rng() % candidates.size()];
    if (a == b) continue;
    if (words[a] > words[b]) std::swap(a, b);
    if (!seen.emplace(a, b).second) continue;
    std::span<const double> ra(ppmi.data() + a * v, v), rb(ppmi.data() + b * v, v);
    task.pairs.push_back({words[a], words[b], diff::cosine(ra, rb)});
  }
  return task;
}

}  // namespace strae::desk
