#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "helpers.hpp"
#include "strae/error.hpp"
#include "strae/trainer/adam.hpp"
#include "strae/trainer/checkpoint.hpp"
#include "strae/trainer/config.hpp"
#include "strae/trainer/trainer.hpp"

using namespace strae;
using namespace strae::train;
namespace fs = std::filesystem;

namespace {

const fs::path kData = STRAE_DATA_DIR;

TrainConfig tiny_config(objectives::Objective objective) {
  TrainConfig c;
  c.objective = objective;
  c.n = 4;
  c.batch_size = 8;
  c.epochs = 2;
  c.corpus = kData / "desk" / "tiny.txt";
  return c;
}

struct TinyData {
  corpus::Vocabulary vocab;
  std::vector<Sentence> sentences;
};

TinyData tiny(TrainConfig& c) {
  TinyData d;
  d.vocab = corpus::build_vocabulary(c.corpus, 0);
  if (!c.checkpoint_dir.empty()) {
    c.vocab = c.checkpoint_dir / "vocab.tsv";
    fs::create_directories(c.checkpoint_dir);
    d.vocab.save(c.vocab);
  }
  d.sentences = load_sentences(c.corpus, {}, d.vocab, c);
  return d;
}

bool same_params(const model::ModelParams& a, const model::ModelParams& b) {
  auto pa = a.parameters();
  auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->value.values() != pb[i]->value.values()) return false;
  return true;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("init_params ranges, shapes and determinism") {
    TrainConfig c;
    c.n = 10;
    c.r = 0.1;
    std::mt19937_64 a(3), b(3);
    auto p = init_params(c, 50, a);
    auto q = init_params(c, 50, b);
    CHECK(p.embedding.value.shape() == diff::Shape{50, 100});
    for (double x : p.embedding.value.data()) CHECK(std::abs(x) < 0.1);
    double s = std::sqrt(6.0 / 30.0);
    for (double x : p.composition.value.data()) CHECK(std::abs(x) < s);
    CHECK(same_params(p, q));
    c.r = 0.0;
    CHECK_THROWS_AS(init_params(c, 50, a), InputError);
  }

  TEST_CASE("uniform draws stay inside the open interval") {
    std::mt19937_64 rng(0);
    for (int i = 0; i < 1000; ++i) {
      double x = uniform(rng, -1.0, 1.0);
      CHECK(x > -1.0);
      CHECK(x < 1.0);
    }
  }

  TEST_CASE("adam worked example") {
    diff::Parameter p("theta", diff::Tensor::vector({0.0}));
    p.grad = diff::Tensor::vector({1.0});
    std::vector<diff::Parameter*> ps = {&p};
    auto state = AdamState::for_params(ps);
    adam_step(ps, state, 0.1);
    // m_hat = 1, v_hat = 1 after bias correction.
    CHECK(p.value[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-14));
    CHECK(state.step == 1);
  }

  TEST_CASE("adam leaves parameters alone for zero gradients") {
    diff::Parameter p("theta", diff::Tensor::vector({0.5, -2.0}));
    p.zero_grad();
    std::vector<diff::Parameter*> ps = {&p};
    auto state = AdamState::for_params(ps);
    adam_step(ps, state, 0.1);
    CHECK(p.value.values() == std::vector<double>{0.5, -2.0});
  }

  TEST_CASE("adam is deterministic and rejects non-finite gradients") {
    auto run = [] {
      diff::Parameter p("theta", diff::Tensor::vector({0.5, -2.0}));
      std::vector<diff::Parameter*> ps = {&p};
      auto state = AdamState::for_params(ps);
      for (int i = 0; i < 3; ++i) {
        p.grad = diff::Tensor::vector({0.3 * i, -1.0});
        adam_step(ps, state, 0.01);
      }
      return p.value.values();
    };
    CHECK(run() == run());

    diff::Parameter p("theta", diff::Tensor::vector({1.0, 2.0}));
    p.grad = diff::Tensor::vector({0.1, std::numeric_limits<double>::quiet_NaN()});
    std::vector<diff::Parameter*> ps = {&p};
    auto state = AdamState::for_params(ps);
    CHECK_THROWS_AS(adam_step(ps, state, 0.1), NonFiniteError);
    CHECK(p.value.values() == std::vector<double>{1.0, 2.0});
  }

  TEST_CASE("gradient clipping bounds the global norm") {
    diff::Parameter p("a", diff::Tensor::vector({0.0, 0.0}));
    p.grad = diff::Tensor::vector({3.0, 4.0});
    std::vector<diff::Parameter*> ps = {&p};
    CHECK(gradient_norm(ps) == doctest::Approx(5.0));
    clip_gradients(ps, 1.0);
    CHECK(gradient_norm(ps) == doctest::Approx(1.0));
    CHECK(p.grad[0] == doctest::Approx(0.6));
  }

  TEST_CASE("config defaults, validation and text round trip") {
    TrainConfig c;
    CHECK(c.epochs == 15);
    CHECK(c.batch_size == 128);
    CHECK(c.tau == 0.2);
    CHECK(c.r == 0.1);
    CHECK(c.learning_rate() == 1e-4);
    c.objective = objectives::Objective::cross_entropy;
    CHECK(c.learning_rate() == 1e-3);
    c.lr = 0.5;
    c.seed = 42;
    c.corpus = "some/corpus.txt";
    auto back = TrainConfig::from_text(c.to_text());
    CHECK(back.to_text() == c.to_text());
    CHECK(back.learning_rate() == 0.5);

    TrainConfig bad;
    bad.model = ModelKind::self_strae;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad.structure_source = model::StructureSource::induced;
    CHECK_NOTHROW(bad.validate());
    TrainConfig induced_strae;
    induced_strae.structure_source = model::StructureSource::induced;
    CHECK_THROWS_AS(induced_strae.validate(), InputError);
    CHECK_THROWS_AS(c.set("no_such_key", "1"), InputError);
  }

  TEST_CASE("format_double is exact") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(x)) == x);
  }

  TEST_CASE("checkpoint save and load are bit-identical") {
    auto c = tiny_config(objectives::Objective::contrastive);
    auto d = tiny(c);
    Trainer t(c, d.vocab, d.sentences, {});
    std::vector<std::size_t> idx = {0, 1, 2};
    t.train_batch(idx);
    auto dir = testing::temp_dir("ckpt");
    auto ck = t.checkpoint();
    save_checkpoint(ck, dir / "a.ckpt");
    auto back = load_checkpoint(dir / "a.ckpt");
    CHECK(same_params(back.params, ck.params));
    CHECK(back.adam.step == ck.adam.step);
    for (std::size_t i = 0; i < ck.adam.m.size(); ++i) {
      CHECK(back.adam.m[i].values() == ck.adam.m[i].values());
      CHECK(back.adam.v[i].values() == ck.adam.v[i].values());
    }
    CHECK(back.rng_state == ck.rng_state);
    CHECK(back.config.to_text() == ck.config.to_text());
    CHECK(fs::exists(blob_path(dir / "a.ckpt")));
  }

  TEST_CASE("resuming from a checkpoint continues the same run") {
    auto c = tiny_config(objectives::Objective::cross_entropy);
    c.epochs = 3;
    auto dir = testing::temp_dir("resume");
    c.checkpoint_dir = dir;
    auto d = tiny(c);
    Trainer full(c, d.vocab, d.sentences, {});
    full.run();

    auto resumed = Trainer::resume(dir / "epoch-002.ckpt");
    CHECK(resumed.epochs_done() == 2);
    auto r = resumed.run_epoch();
    auto again = load_checkpoint(dir / "epoch-003.ckpt");
    CHECK(same_params(resumed.params(), again.params));
    CHECK(r.dev_loss == again.dev_loss_history.back());
  }

  TEST_CASE("a checkpoint reload reproduces the next batch loss") {
    auto c = tiny_config(objectives::Objective::contrastive);
    auto d = tiny(c);
    Trainer a(c, d.vocab, d.sentences, {});
    std::vector<std::size_t> first = {0, 1, 2, 3}, second = {4, 5, 6, 7};
    a.train_batch(first);
    auto dir = testing::temp_dir("reload");
    c.checkpoint_dir = dir;
    save_checkpoint(a.checkpoint(), dir / "x.ckpt");
    double uninterrupted = a.train_batch(second);

    auto ck = load_checkpoint(dir / "x.ckpt");
    Trainer b(c, d.vocab, d.sentences, {});
    b.params() = ck.params;
    double reloaded = b.evaluate({d.sentences[4], d.sentences[5], d.sentences[6], d.sentences[7]});
    CHECK(reloaded == uninterrupted);
  }

  TEST_CASE("zero learning rate freezes everything") {
    auto c = tiny_config(objectives::Objective::contrastive);
    c.lr = 0.0;
    auto d = tiny(c);
    Trainer t(c, d.vocab, d.sentences, {});
    auto before = t.params();
    std::vector<std::size_t> idx = {0, 1, 2, 3};
    double l1 = t.train_batch(idx);
    double l2 = t.train_batch(idx);
    CHECK(l1 == l2);
    CHECK(same_params(before, t.params()));
  }

  TEST_CASE("loss on a repeated sentence keeps falling") {
    auto c = tiny_config(objectives::Objective::cross_entropy);
    c.batch_size = 1;
    auto d = tiny(c);
    Trainer t(c, d.vocab, {d.sentences[3]}, {});
    std::vector<std::size_t> idx = {0};
    std::vector<double> losses;
    for (int i = 0; i < 60; ++i) losses.push_back(t.train_batch(idx));
    std::vector<double> windows;
    for (std::size_t s = 10; s + 5 <= losses.size(); s += 5) {
      double m = 0.0;
      for (std::size_t k = s; k < s + 5; ++k) m += losses[k] / 5.0;
      windows.push_back(m);
    }
    for (std::size_t k = 1; k < windows.size(); ++k) CHECK(windows[k] <= windows[k - 1]);
  }

  TEST_CASE("the tiny corpus can be memorised") {
    auto c = tiny_config(objectives::Objective::cross_entropy);
    c.r = 1.0;
    c.batch_size = 1;
    c.epochs = 300;
    auto d = tiny(c);
    Trainer t(c, d.vocab, d.sentences, {});
    auto result = t.run();
    double bound = 0.1 * std::log(static_cast<double>(d.vocab.size()));
    CHECK(result.epochs.back().train_loss < bound);
  }

  TEST_CASE("same seed gives the same metrics log") {
    auto c = tiny_config(objectives::Objective::contrastive);
    auto d = tiny(c);
    Trainer a(c, d.vocab, d.sentences, {});
    Trainer b(c, d.vocab, d.sentences, {});
    a.run();
    b.run();
    CHECK(a.metrics_log() == b.metrics_log());
    CHECK(same_params(a.params(), b.params()));
    std::istringstream lines(a.metrics_log());
    std::string first;
    std::getline(lines, first);
    CHECK(first.rfind("1\t1\ttrain\t", 0) == 0);
  }

  TEST_CASE("a non-finite loss halts training and keeps earlier checkpoints") {
    auto c = tiny_config(objectives::Objective::contrastive);
    auto dir = testing::temp_dir("halt");
    c.checkpoint_dir = dir;
    auto d = tiny(c);
    Trainer first(c, d.vocab, d.sentences, {});
    first.run();

    auto t = Trainer::resume(dir / "epoch-001.ckpt");
    t.params().embedding.value[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(t.run(), TrainingHalted);
    auto kept = load_checkpoint(dir / "epoch-001.ckpt");
    CHECK(kept.params.embedding.value.all_finite());
    CHECK(fs::exists(dir / "metrics.tsv"));
  }

  TEST_CASE("tree files must align with the corpus") {
    auto dir = testing::temp_dir("align");
    testing::write_text(dir / "c.txt", "a b c\nb c\n");
    testing::write_text(dir / "t.trees", "(S a (X b c))\n(S b)\n");
    TrainConfig c;
    c.structure_source = model::StructureSource::given;
    auto vocab = corpus::build_vocabulary(dir / "c.txt", 0);
    CHECK_THROWS_AS(load_sentences(dir / "c.txt", dir / "t.trees", vocab, c), InputError);
    testing::write_text(dir / "t.trees", "(S a (X b c))\n");
    CHECK_THROWS_AS(load_sentences(dir / "c.txt", dir / "t.trees", vocab, c), InputError);
    testing::write_text(dir / "t.trees", "(S a (X b c))\n(S b c)\n");
    auto s = load_sentences(dir / "c.txt", dir / "t.trees", vocab, c);
    CHECK(s.size() == 2);
    CHECK(s[0].tree->leaf_count() == 3);
  }

  TEST_CASE("overlong sentences are truncated with a warning") {
    auto dir = testing::temp_dir("cap");
    testing::write_text(dir / "c.txt", "a b c d e f\na b\n");
    TrainConfig c;
    c.max_length = 4;
    auto vocab = corpus::build_vocabulary(dir / "c.txt", 0);
    std::ostringstream warn;
    auto s = load_sentences(dir / "c.txt", {}, vocab, c, &warn);
    CHECK(s[0].ids.size() == 4);
    CHECK(warn.str().find("truncating") != std::string::npos);
  }

  TEST_CASE("model gradients pass for every architecture and objective") {
    for (auto model : {ModelKind::strae, ModelKind::iornn}) {
      for (auto obj : {objectives::Objective::cross_entropy, objectives::Objective::contrastive,
                       objectives::Objective::degenerate}) {
        TrainConfig c;
        c.model = model;
        c.objective = obj;
        c.n = 3;
        CHECK(check_model_gradients(c, 20, 5).max_relative_error < 1e-4);
      }
    }
    TrainConfig s;
    s.model = ModelKind::self_strae;
    s.structure_source = model::StructureSource::induced;
    s.n = 3;
    CHECK(check_model_gradients(s, 20, 5).max_relative_error < 1e-4);
  }
}
