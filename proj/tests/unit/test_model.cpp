#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "strae/corpus/tree.hpp"
#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"
#include "strae/model/params.hpp"
#include "strae/model/strae.hpp"
#include "strae/trainer/trainer.hpp"

using namespace strae;
using namespace strae::model;

namespace {

ModelParams make_params(Architecture arch, std::size_t v, std::size_t n, std::uint64_t seed, double r = 0.5) {
  train::TrainConfig c;
  c.model = arch == Architecture::iornn ? train::ModelKind::iornn : train::ModelKind::strae;
  c.n = n;
  c.r = r;
  std::mt19937_64 rng(seed);
  return train::init_params(c, v, rng);
}

std::vector<double> values(Var v) {
  auto d = v.value().data();
  return {d.begin(), d.end()};
}

std::vector<double> psi_row(const ModelParams& p, TokenId id) {
  std::size_t d = p.dim();
  auto data = p.embedding.value.data();
  return {data.begin() + static_cast<std::ptrdiff_t>(id * d), data.begin() + static_cast<std::ptrdiff_t>((id + 1) * d)};
}

std::vector<double> flat(const diff::Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("parameter shapes follow N") {
    auto p = ModelParams::zeros(Architecture::strae, 12, 3);
    CHECK(p.embedding.value.shape() == diff::Shape{12, 9});
    CHECK(p.composition.value.shape() == diff::Shape{6, 3});
    CHECK(p.decomposition.value.shape() == diff::Shape{3, 6});
    CHECK(p.parameters().size() == 3);
    auto q = ModelParams::zeros(Architecture::iornn, 12, 3);
    CHECK(q.decompose_left.value.shape() == diff::Shape{6, 3});
    CHECK(q.global_root.value.shape() == diff::Shape{3, 3});
    CHECK(q.parameters().size() == 6);
  }

  TEST_CASE("leaf embedding is the reshaped Psi row") {
    auto p = make_params(Architecture::strae, 7, 3, 1);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    Var leaf = embed_leaf(b, 4);
    CHECK(leaf.shape() == diff::Shape{3, 3});
    CHECK(values(leaf) == psi_row(p, 4));
    CHECK_THROWS_AS(embed_leaf(b, 7), ContractError);
  }

  TEST_CASE("composition matches a loop oracle") {
    auto p = make_params(Architecture::strae, 5, 3, 2);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    Var c = compose(b, embed_leaf(b, 1), embed_leaf(b, 2));
    auto expect = oracle::compose(psi_row(p, 1), psi_row(p, 2), flat(p.composition.value), 3);
    auto got = values(c);
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-14));
  }

  TEST_CASE("encode and decode produce one embedding per node") {
    auto p = make_params(Architecture::strae, 9, 3, 3);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    std::vector<TokenId> ids = {1, 2, 3, 4, 5};
    auto ae = autoencode(b, ids, StructureSource::balanced);
    CHECK(ae.nodes.up.size() == 9);
    CHECK(ae.nodes.down.size() == 9);
    CHECK(ae.nodes.recon.size() == 5);
    CHECK(ae.nodes.down[ae.tree.root()].index() == ae.nodes.up[ae.tree.root()].index());
    for (auto& r : ae.nodes.recon) {
      double s = 0.0;
      for (double x : r.value().data()) s += x;
      CHECK(s == doctest::Approx(1.0));
    }
  }

  TEST_CASE("one-token sentences") {
    auto p = make_params(Architecture::strae, 6, 2, 4);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    std::vector<TokenId> ids = {3};
    auto ae = autoencode(b, ids, StructureSource::balanced);
    CHECK(ae.tree.node_count() == 1);
    CHECK(values(ae.nodes.down[0]) == values(ae.nodes.up[0]));
    CHECK(sentence_root(p, ids, StructureSource::right_branching) == psi_row(p, 3));

    auto q = make_params(Architecture::iornn, 6, 2, 4);
    diff::Tape t2;
    auto bq = bind_frozen(t2, q);
    auto aq = autoencode(bq, ids, StructureSource::balanced);
    CHECK(values(aq.nodes.down[0]) == flat(q.global_root.value));
  }

  TEST_CASE("encoding is faithful to the tree") {
    auto p = make_params(Architecture::strae, 9, 3, 5);
    std::vector<TokenId> ids = {1, 2, 3, 4};
    auto bal = sentence_root(p, ids, StructureSource::balanced);
    auto rb = sentence_root(p, ids, StructureSource::right_branching);
    CHECK(bal != rb);
    auto given = corpus::balanced_tree(4);
    CHECK(sentence_root(p, ids, StructureSource::given, &given) == bal);
    CHECK_THROWS_AS(sentence_root(p, ids, StructureSource::given), ContractError);
    auto wrong = corpus::balanced_tree(3);
    CHECK_THROWS_AS(sentence_root(p, ids, StructureSource::given, &wrong), InputError);
  }

  TEST_CASE("StrAE decoding reads only the root") {
    auto p = make_params(Architecture::strae, 9, 3, 6);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    std::vector<TokenId> ids = {1, 2, 3, 4, 5};
    auto tree = corpus::balanced_tree(5);
    auto ups = encode(b, tree, ids);
    auto first = decode(b, tree, ups[tree.root()]);
    auto again = decode(b, tree, ups[tree.root()]);
    for (std::size_t i = 0; i < first.recon.size(); ++i) CHECK(values(first.recon[i]) == values(again.recon[i]));
  }

  TEST_CASE("IORNN decoding reads sibling upward embeddings") {
    auto p = make_params(Architecture::iornn, 9, 3, 7);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    std::vector<TokenId> ids = {1, 2, 3};
    auto tree = corpus::balanced_tree(3);
    auto ups = encode(b, tree, ids);
    auto base = iornn_decode(b, tree, ups);
    std::vector<Var> bumped = ups;
    NodeId leaf = tree.leaf_at(2);
    bumped[leaf] = tape.constant(diff::Tensor({3, 3}, 0.25));
    auto changed = iornn_decode(b, tree, bumped);
    CHECK(values(changed.recon[0]) != values(base.recon[0]));
  }

  TEST_CASE("induction on short sentences") {
    auto p = make_params(Architecture::strae, 9, 3, 8);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    std::vector<TokenId> one = {2};
    auto i1 = induce_structure(b, one);
    CHECK(i1.tree.node_count() == 1);
    std::vector<TokenId> two = {2, 5};
    auto i2 = induce_structure(b, two);
    CHECK(i2.tree.node_count() == 3);
    CHECK(i2.up.size() == 3);
    CHECK_THROWS_AS(induce_structure(b, std::vector<TokenId>{}), ContractError);
  }

  TEST_CASE("induction breaks ties to the left") {
    // All leaves identical: every adjacent pair has cosine 1 on the first scan.
    auto p = make_params(Architecture::strae, 4, 2, 9);
    diff::Tape tape;
    auto b = bind_frozen(tape, p);
    std::vector<TokenId> ids = {1, 1, 1, 1};
    auto ind = induce_structure(b, ids);
    const auto& first_merge = ind.tree.node(4);
    CHECK(first_merge.begin == 0);
    CHECK(first_merge.end == 2);
  }

  TEST_CASE("induction matches the re-scan oracle") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 50; ++trial) {
      auto p = make_params(Architecture::strae, 15, 3, 100 + trial);
      std::size_t len = 1 + rng() % 12;
      std::vector<TokenId> ids;
      std::vector<std::vector<double>> leaves;
      for (std::size_t k = 0; k < len; ++k) {
        ids.push_back(static_cast<TokenId>(rng() % 15));
        leaves.push_back(psi_row(p, ids.back()));
      }
      diff::Tape tape;
      auto b = bind_frozen(tape, p);
      auto ind = induce_structure(b, ids);
      auto merges = oracle::induce(leaves, flat(p.composition.value), 3);
      REQUIRE(merges.size() == len - 1);
      for (std::size_t k = 0; k < merges.size(); ++k) {
        const auto& node = ind.tree.node(static_cast<NodeId>(len + k));
        CHECK(node.children[0] == merges[k].first);
        CHECK(node.children[1] == merges[k].second);
      }
    }
  }

  TEST_CASE("structure source names") {
    CHECK(parse_structure_source("tree_file") == StructureSource::given);
    CHECK(parse_structure_source("right_branching") == StructureSource::right_branching);
    CHECK(to_string(StructureSource::induced) == "induced");
    CHECK_THROWS_AS(parse_structure_source("left"), InputError);
  }
}
