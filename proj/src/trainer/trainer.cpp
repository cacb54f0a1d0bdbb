#include "strae/trainer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "strae/corpus/bracketed.hpp"
#include "strae/io/atomic_file.hpp"

namespace strae::train {

namespace fs = std::filesystem;
using corpus::TokenizerOptions;
using diff::Tape;
using diff::Var;

std::vector<Sentence> load_sentences(const fs::path& corpus_path, const fs::path& tree_path,
                                     const corpus::Vocabulary& vocab, const TrainConfig& config,
                                     std::ostream* warnings) {
  TokenizerOptions options{config.lowercase};
  auto lines = corpus::read_corpus(corpus_path, options);
  std::vector<corpus::ParsedTree> trees;
  bool with_trees = !tree_path.empty();
  if (with_trees) {
    trees = corpus::read_tree_file(tree_path);
    if (trees.size() != lines.size())
      throw InputError(tree_path.string() + ": " + std::to_string(trees.size()) + " trees for " +
                       std::to_string(lines.size()) + " corpus lines in " + corpus_path.string());
  }

  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto& tokens = lines[i];
    if (tokens.empty()) {
      if (with_trees && trees[i].tree.leaf_count() != 0)
        throw InputError(corpus_path.string() + ":" + std::to_string(i + 1) + ": blank line has a tree");
      continue;
    }
    if (with_trees && trees[i].tree.leaf_count() != tokens.size())
      throw InputError(tree_path.string() + ":" + std::to_string(i + 1) + ": tree has " +
                       std::to_string(trees[i].tree.leaf_count()) + " leaves, sentence has " +
                       std::to_string(tokens.size()) + " tokens");
    if (config.max_length > 0 && tokens.size() > config.max_length) {
      if (with_trees) {
        if (warnings)
          *warnings << "warning: " << corpus_path.string() << ":" << i + 1 << ": skipping sentence of "
                    << tokens.size() << " tokens (max_length " << config.max_length << ")\n";
        continue;
      }
      if (warnings)
        *warnings << "warning: " << corpus_path.string() << ":" << i + 1 << ": truncating " << tokens.size()
                  << " tokens to " << config.max_length << "\n";
      tokens.resize(config.max_length);
    }
    Sentence s;
    s.ids = corpus::encode_sentence(tokens, vocab, options);
    if (with_trees) s.tree = std::move(trees[i].tree);
    out.push_back(std::move(s));
  }
  return out;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

namespace {

void fill_uniform(diff::Tensor& t, std::mt19937_64& rng, double range) {
  for (auto& x : t.data()) x = uniform(rng, -range, range);
}

}  // namespace

model::ModelParams init_params(const TrainConfig& config, std::size_t vocab_size, std::mt19937_64& rng) {
  if (!(config.r > 0.0)) throw InputError("init: r must be positive");
  if (config.n == 0) throw InputError("init: n must be positive");
  auto p = model::ModelParams::zeros(architecture_of(config.model), vocab_size, config.n);
  double s = std::sqrt(6.0 / (3.0 * static_cast<double>(config.n)));
  fill_uniform(p.embedding.value, rng, config.r);
  fill_uniform(p.composition.value, rng, s);
  fill_uniform(p.decomposition.value, rng, s);
  if (p.architecture == model::Architecture::iornn) {
    fill_uniform(p.decompose_left.value, rng, s);
    fill_uniform(p.decompose_right.value, rng, s);
    fill_uniform(p.global_root.value, rng, s);
  }
  return p;
}

LossSpec LossSpec::from(const TrainConfig& config) {
  return {config.objective, config.structure_source, config.tau, config.intra_view_negatives};
}

BatchForward forward_batch(const model::BoundParams& params, std::span<const Sentence* const> batch,
                           const LossSpec& spec) {
  if (batch.empty()) throw ContractError("forward_batch: empty batch");
  BatchForward out;
  out.sentences.reserve(batch.size());
  for (const Sentence* s : batch) {
    const corpus::Tree* given = s->tree ? &*s->tree : nullptr;
    out.sentences.push_back(model::autoencode(params, s->ids, spec.source, given));
  }
  switch (spec.objective) {
    case objectives::Objective::cross_entropy: {
      std::vector<std::vector<TokenId>> targets;
      targets.reserve(batch.size());
      for (const Sentence* s : batch) targets.push_back(s->ids);
      out.loss = objectives::batch_cross_entropy(out.sentences, targets);
      break;
    }
    case objectives::Objective::contrastive:
      out.loss = objectives::contrastive_loss(objectives::gather_nodes(out.sentences),
                                              {spec.tau, spec.intra_view_negatives});
      break;
    case objectives::Objective::degenerate:
      out.loss = objectives::degenerate_similarity_loss(objectives::gather_nodes(out.sentences));
      break;
  }
  return out;
}

diff::GradCheckResult check_model_gradients(const TrainConfig& config, std::size_t vocab_size, std::size_t length,
                                            const diff::GradCheckOptions& options) {
  if (length == 0) throw InputError("gradcheck: length must be positive");
  std::mt19937_64 rng(config.seed);
  auto params = init_params(config, vocab_size, rng);
  Sentence s;
  for (std::size_t i = 0; i < length; ++i) s.ids.push_back(static_cast<TokenId>(rng() % vocab_size));
  LossSpec spec = LossSpec::from(config);
  if (spec.source == model::StructureSource::given) spec.source = model::StructureSource::balanced;
  const Sentence* batch[] = {&s};
  auto f = [&](Tape& tape) {
    auto bound = model::bind(tape, params);
    return forward_batch(bound, batch, spec).loss;
  };
  auto pointers = params.parameters();
  return diff::check_gradients(f, pointers, options);
}

Trainer::Trainer(TrainConfig config, corpus::Vocabulary vocab, std::vector<Sentence> train,
                 std::vector<Sentence> dev)
    : config_(std::move(config)), vocab_(std::move(vocab)), train_(std::move(train)), dev_(std::move(dev)) {
  config_.validate();
  if (train_.empty()) throw InputError("train: corpus has no sentences");
  if (config_.structure_source == model::StructureSource::given) {
    for (const auto* set : {&train_, &dev_})
      for (const auto& s : *set)
        if (!s.tree) throw InputError("train: structure_source tree_file needs a tree for every sentence");
  }
  rng_.seed(config_.seed);
  params_ = init_params(config_, vocab_.size(), rng_);
  adam_ = AdamState::for_params(params_.parameters());
}

Trainer Trainer::from_config(const TrainConfig& config, std::ostream* warnings) {
  config.validate();
  if (config.vocab.empty()) throw InputError("train: vocab path is required");
  if (config.corpus.empty()) throw InputError("train: corpus path is required");
  bool given = config.structure_source == model::StructureSource::given;
  if (given && config.tree_file.empty()) throw InputError("train: structure_source tree_file needs tree_file");
  auto vocab = corpus::Vocabulary::load(config.vocab);
  auto train = load_sentences(config.corpus, given ? config.tree_file : fs::path{}, vocab, config, warnings);
  std::vector<Sentence> dev;
  if (!config.dev_corpus.empty()) {
    if (given && config.dev_tree_file.empty())
      throw InputError("train: structure_source tree_file needs dev_tree_file with dev_corpus");
    dev = load_sentences(config.dev_corpus, given ? config.dev_tree_file : fs::path{}, vocab, config, warnings);
  }
  return Trainer(config, std::move(vocab), std::move(train), std::move(dev));
}

Trainer Trainer::resume(const fs::path& manifest, std::ostream* warnings) {
  Checkpoint c = load_checkpoint(manifest);
  Trainer t = from_config(c.config, warnings);
  if (c.params.vocab_size != t.vocab_.size())
    throw InputError(manifest.string() + ": vocabulary size differs from " + c.config.vocab.string());
  t.params_ = std::move(c.params);
  t.adam_ = std::move(c.adam);
  t.epoch_ = c.epoch;
  t.dev_history_ = std::move(c.dev_loss_history);
  std::istringstream rng_in(c.rng_state);
  rng_in >> t.rng_;
  if (!rng_in) throw InputError(manifest.string() + ": bad rng state");

  if (!c.config.checkpoint_dir.empty()) {
    std::ifstream in(c.config.checkpoint_dir / "metrics.tsv");
    std::string line;
    while (std::getline(in, line)) {
      std::size_t epoch = std::strtoull(line.c_str(), nullptr, 10);
      if (epoch >= 1 && epoch <= t.epoch_) t.metrics_ += line + "\n";
    }
  }
  return t;
}

double Trainer::train_batch(std::span<const std::size_t> indices) {
  std::vector<const Sentence*> batch;
  batch.reserve(indices.size());
  for (auto i : indices) batch.push_back(&train_.at(i));

  auto params = params_.parameters();
  params_.zero_grad();
  Tape tape;
  auto bound = model::bind(tape, params_);
  auto fwd = forward_batch(bound, batch, LossSpec::from(config_));
  double loss = fwd.loss.value().item();
  if (!std::isfinite(loss)) throw NonFiniteError("train: non-finite loss");
  tape.backward(fwd.loss);
  if (config_.clip_norm > 0.0) clip_gradients(params, config_.clip_norm);
  adam_step(params, adam_, config_.learning_rate());
  return loss;
}

double Trainer::evaluate(const std::vector<Sentence>& sentences) {
  if (sentences.empty()) throw ContractError("evaluate: no sentences");
  auto spec = LossSpec::from(config_);
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t begin = 0; begin < sentences.size(); begin += config_.batch_size) {
    std::size_t end = std::min(sentences.size(), begin + config_.batch_size);
    std::vector<const Sentence*> batch;
    for (std::size_t i = begin; i < end; ++i) batch.push_back(&sentences[i]);
    Tape tape;
    auto bound = model::bind_frozen(tape, params_);
    total += forward_batch(bound, batch, spec).loss.value().item();
    ++batches;
  }
  return total / static_cast<double>(batches);
}

std::vector<std::size_t> Trainer::shuffled_order() {
  std::vector<std::size_t> order(train_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng_() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

namespace {

void log_line(std::string& metrics, std::size_t epoch, std::size_t batch, const char* split, double loss) {
  metrics += std::to_string(epoch) + "\t" + std::to_string(batch) + "\t" + split + "\t" + format_double(loss) + "\n";
}

}  // namespace

EpochResult Trainer::run_epoch() {
  auto order = shuffled_order();
  std::size_t epoch = epoch_ + 1;
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
    std::size_t end = std::min(order.size(), begin + config_.batch_size);
    double loss = train_batch(std::span(order).subspan(begin, end - begin));
    ++batches;
    total += loss;
    log_line(metrics_, epoch, batches, "train", loss);
  }
  EpochResult r;
  r.epoch = epoch;
  r.train_loss = total / static_cast<double>(batches);
  // Without a dev set the training loss stands in for model selection.
  r.dev_loss = dev_.empty() ? r.train_loss : evaluate(dev_);
  if (!std::isfinite(r.dev_loss)) throw NonFiniteError("train: non-finite dev loss");
  log_line(metrics_, epoch, 0, "dev", r.dev_loss);
  dev_history_.push_back(r.dev_loss);
  epoch_ = epoch;
  return r;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.config = config_;
  c.params = params_;
  c.adam = adam_;
  c.epoch = epoch_;
  c.dev_loss_history = dev_history_;
  std::ostringstream rng_out;
  rng_out << rng_;
  c.rng_state = rng_out.str();
  return c;
}

TrainResult Trainer::run(std::ostream* progress) {
  TrainResult result;
  const fs::path& dir = config_.checkpoint_dir;
  if (!dir.empty()) fs::create_directories(dir);

  std::optional<Checkpoint> best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < dev_history_.size(); ++e)
    if (dev_history_[e] < best_loss) {
      best_loss = dev_history_[e];
      result.best_epoch = e + 1;
    }
  if (result.best_epoch != 0 && !dir.empty() && fs::exists(dir / "best.ckpt")) best = load_checkpoint(dir / "best.ckpt");

  while (epoch_ < config_.epochs) {
    EpochResult r;
    try {
      r = run_epoch();
    } catch (const NonFiniteError& e) {
      if (!dir.empty()) io::write_file_atomic(dir / "metrics.tsv", metrics_);
      throw TrainingHalted(std::string(e.what()) + " in epoch " + std::to_string(epoch_ + 1) +
                           "; last good checkpoint kept in " + dir.string());
    }
    result.epochs.push_back(r);
    if (progress)
      *progress << "epoch " << r.epoch << " train " << format_double(r.train_loss) << " dev "
                << format_double(r.dev_loss) << "\n";
    Checkpoint c = checkpoint();
    bool improved = r.dev_loss < best_loss;
    if (improved) {
      best_loss = r.dev_loss;
      result.best_epoch = r.epoch;
    }
    if (!dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch-%03zu.ckpt", r.epoch);
      save_checkpoint(c, dir / name);
      if (improved) save_checkpoint(c, dir / "best.ckpt");
      io::write_file_atomic(dir / "metrics.tsv", metrics_);
    }
    if (improved) best = std::move(c);
  }

  if (!dir.empty() && best) {
    result.final_checkpoint = dir / "final.ckpt";
    save_checkpoint(*best, result.final_checkpoint);
  }
  return result;
}

}  // namespace strae::train
