#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "strae/diffcore/gradcheck.hpp"
#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"
#include "strae/objectives/losses.hpp"

using namespace strae;
using namespace strae::objectives;
using diff::Tape;
using diff::Tensor;

namespace {

BatchNodes batch_of(Tape& tape, const oracle::Matrix& u, const oracle::Matrix& d) {
  return {tape.constant(testing::to_tensor(u)), tape.constant(testing::to_tensor(d))};
}

double contrastive(const oracle::Matrix& u, const oracle::Matrix& d, ContrastiveOptions o = {}) {
  Tape tape;
  return contrastive_loss(batch_of(tape, u, d), o).value().item();
}

double degenerate(const oracle::Matrix& u, const oracle::Matrix& d) {
  Tape tape;
  return degenerate_similarity_loss(batch_of(tape, u, d)).value().item();
}

double ce(const std::vector<TokenId>& targets, const std::vector<std::vector<double>>& dists) {
  Tape tape;
  std::vector<diff::Var> recons;
  for (const auto& p : dists) recons.push_back(tape.constant(Tensor::vector(p)));
  return cross_entropy_loss(targets, recons).value().item();
}

}  // namespace

TEST_SUITE("objectives") {
  TEST_CASE("cross entropy worked values") {
    std::vector<double> uniform(20, 1.0 / 20.0);
    CHECK(ce({3}, {uniform}) == doctest::Approx(std::log(20.0)).epsilon(1e-12));
    CHECK(ce({1, 0}, {{0.0, 1.0}, {1.0, 0.0}}) == 0.0);
    double expect = (std::log(2.0) + std::log(4.0)) / 2.0;
    CHECK(ce({0, 1}, {{0.5, 0.5}, {0.75, 0.25}}) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(ce({0}, {{0.0, 1.0}}) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(ce({0, 1}, {uniform}), ContractError);
  }

  TEST_CASE("cross entropy is non-negative") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> p(5);
      double s = 0.0;
      for (auto& x : p) s += (x = u(rng));
      for (auto& x : p) x /= s;
      CHECK(ce({static_cast<TokenId>(rng() % 5)}, {p}) > 0.0);
    }
  }

  TEST_CASE("contrastive worked values") {
    oracle::Matrix one = {{0.3, -1.0, 2.0}};
    CHECK(contrastive(one, one) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    oracle::Matrix eye = {{1.0, 0.0}, {0.0, 1.0}};
    double expect = -std::log(std::exp(5.0) / (std::exp(5.0) + 1.0));
    CHECK(contrastive(eye, eye) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(expect == doctest::Approx(0.006693).epsilon(1e-4));
    CHECK_THROWS_AS(contrastive(eye, eye, {0.0, false}), ContractError);
  }

  TEST_CASE("contrastive matches the loop oracle") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
      std::size_t m = 1 + rng() % 12;
      auto u = oracle::random_matrix(m, 4, rng);
      auto d = oracle::random_matrix(m, 4, rng);
      CHECK(std::abs(contrastive(u, d) - oracle::contrastive(u, d, 0.2)) < 1e-10);
      CHECK(std::abs(contrastive(u, d, {0.5, true}) - oracle::contrastive_intra(u, d, 0.5)) < 1e-10);
    }
  }

  TEST_CASE("contrastive is invariant to joint row permutation and row rescaling") {
    std::mt19937_64 rng(3);
    auto u = oracle::random_matrix(8, 5, rng);
    auto d = oracle::random_matrix(8, 5, rng);
    double base = contrastive(u, d);
    std::vector<std::size_t> perm = {3, 0, 7, 1, 6, 2, 5, 4};
    oracle::Matrix pu, pd;
    for (auto k : perm) {
      pu.push_back(u[k]);
      pd.push_back(d[k]);
    }
    CHECK(std::abs(contrastive(pu, pd) - base) < 1e-10);
    auto su = u;
    for (auto& x : su[2]) x *= 7.5;
    auto sd = d;
    for (auto& x : sd[5]) x *= 0.01;
    // The 1e-8 cosine epsilon is the only scale-dependent term.
    CHECK(std::abs(contrastive(su, sd) - base) < 1e-6);
    for (auto& x : su[2]) x = x / 7.5 * 2.0;
    CHECK(std::abs(contrastive(su, d) - base) < 1e-7);
  }

  TEST_CASE("contrastive decreases as the diagonal increases") {
    // Rows 0 and 1 of the downs are rotated toward their ups; the other
    // pairs, and every off-diagonal cosine involving orthogonal axes, stay put.
    auto make = [](double c) {
      double s = std::sqrt(1.0 - c * c);
      oracle::Matrix u = {{1, 0, 0, 0}, {0, 1, 0, 0}};
      oracle::Matrix d = {{c, 0, s, 0}, {0, c, 0, s}};
      return contrastive(u, d);
    };
    CHECK(make(0.9) < make(0.5));
    CHECK(make(0.5) < make(0.1));
  }

  TEST_CASE("degenerate loss values") {
    oracle::Matrix u = {{1, 2}, {3, -1}};
    CHECK(degenerate(u, u) == doctest::Approx(-1.0));
    CHECK(degenerate({{1, 0}}, {{0, 1}}) == 0.0);
    std::mt19937_64 rng(4);
    auto a = oracle::random_matrix(4, 6, rng);
    auto b = oracle::random_matrix(4, 6, rng);
    CHECK(std::abs(degenerate(a, b) - oracle::degenerate(a, b)) < 1e-12);
  }

  TEST_CASE("loss gradients pass the finite-difference check") {
    std::mt19937_64 rng(5);
    diff::Parameter u("u", testing::random_tensor({6, 4}, rng));
    diff::Parameter d("d", testing::random_tensor({6, 4}, rng));
    std::vector<diff::Parameter*> ps = {&u, &d};
    auto run = [&](auto loss) {
      return diff::check_gradients([&](Tape& t) { return loss(BatchNodes{t.watch(u), t.watch(d)}); }, ps)
          .max_relative_error;
    };
    CHECK(run([](const BatchNodes& b) { return contrastive_loss(b); }) < 1e-4);
    CHECK(run([](const BatchNodes& b) { return contrastive_loss(b, {0.2, true}); }) < 1e-4);
    CHECK(run([](const BatchNodes& b) { return degenerate_similarity_loss(b); }) < 1e-4);

    diff::Parameter logits("logits", testing::random_tensor({5}, rng));
    std::vector<diff::Parameter*> lp = {&logits};
    std::vector<TokenId> target = {2};
    double err = diff::check_gradients(
                     [&](Tape& t) {
                       std::vector<diff::Var> r = {diff::softmax(t.watch(logits))};
                       return cross_entropy_loss(target, r);
                     },
                     lp)
                     .max_relative_error;
    CHECK(err < 1e-4);
  }

  TEST_CASE("objective names") {
    CHECK(parse_objective("cross_entropy") == Objective::cross_entropy);
    CHECK(parse_objective("contrastive") == Objective::contrastive);
    CHECK(to_string(Objective::degenerate) == "degenerate");
    CHECK_THROWS_AS(parse_objective("mse"), InputError);
  }
}
