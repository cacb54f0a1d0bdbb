#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "strae/diffcore/gradcheck.hpp"
#include "strae/diffcore/ops.hpp"
#include "strae/error.hpp"

using namespace strae;
using namespace strae::diff;

namespace {

/// Scalar read-out with non-uniform upstream gradients: sum(tanh(v + c)).
Var readout(Tape& tape, Var v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var c = tape.constant(testing::random_tensor(v.shape(), rng));
  return sum(tanh(add(v, c)));
}

double check(const Objective& f, std::vector<Parameter*> params) {
  return check_gradients(f, params).max_relative_error;
}

Parameter param(const char* name, Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return Parameter(name, testing::random_tensor(shape, rng));
}

}  // namespace

TEST_SUITE("diffcore") {
  TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3}, 1.5);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
    CHECK_THROWS(Tensor({2, 2}, std::vector<double>{1.0}));
    CHECK_THROWS(Tensor::vector({1.0}).rows());
    t[4] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
  }

  TEST_CASE("forward values of small ops") {
    Tape tape;
    Var a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    Var b = tape.constant(Tensor::matrix(2, 1, {1, -1}));
    auto m = matmul(a, b).value();
    CHECK(m[0] == -1.0);
    CHECK(m[1] == -1.0);
    auto h = hcat(a, b).value();
    CHECK(h.cols() == 3);
    CHECK(h.at(1, 2) == -1.0);
    auto [l, r] = hsplit(a);
    CHECK(l.value().at(1, 0) == 3.0);
    CHECK(r.value().at(0, 0) == 2.0);
    auto sq = square(tape.constant(Tensor::vector({1, 2, 3, 4}))).value();
    CHECK(sq.shape() == Shape{2, 2});
    CHECK(flatten(a).value().shape() == Shape{4});
    CHECK(row(a, 1).value()[0] == 3.0);
  }

  TEST_CASE("softmax and tempered softmax") {
    std::vector<double> x = {1.0, 2.0, 3.0};
    auto p = tempered_softmax(x, 1.0);
    double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(p[2] == doctest::Approx(std::exp(3.0) / z).epsilon(1e-14));
    auto sharp = tempered_softmax(x, 0.2);
    CHECK(sharp[2] > p[2]);
    CHECK_THROWS_AS(tempered_softmax(x, 0.0), ContractError);
    auto big = tempered_softmax(std::vector<double>{1000.0, 1000.0}, 1.0);
    CHECK(big[0] == doctest::Approx(0.5));
  }

  TEST_CASE("cosine similarity matrix matches a naive loop") {
    std::mt19937_64 rng(3);
    auto u = oracle::random_matrix(5, 7, rng);
    auto d = oracle::random_matrix(5, 7, rng);
    Tensor a = cosine_similarity_matrix(testing::to_tensor(u), testing::to_tensor(d));
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) CHECK(a.at(i, j) == doctest::Approx(oracle::cosine(u[i], d[j])).epsilon(1e-13));
    CHECK(cosine(u[0], u[0]) == doctest::Approx(1.0));
  }

  TEST_CASE("gradients of elementwise and shape ops") {
    Parameter x = param("x", {3, 4}, 1);
    Parameter y = param("y", {4, 2}, 2);
    Parameter z = param("z", {3, 4}, 3);
    CHECK(check([&](Tape& t) { return readout(t, matmul(t.watch(x), t.watch(y)), 9); }, {&x, &y}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, sub(t.watch(x), scale(t.watch(z), 0.3)), 9); }, {&x, &z}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, transpose(t.watch(x)), 9); }, {&x}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, hcat(t.watch(x), t.watch(z)), 9); }, {&x, &z}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, hsplit(t.watch(x)).second, 9); }, {&x}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, col_slice(t.watch(x), 1, 2), 9); }, {&x}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, row(t.watch(x), 2), 9); }, {&x}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, reshape(t.watch(x), {2, 6}), 9); }, {&x}) < 1e-6);
    CHECK(check([&](Tape& t) { return mean(tanh(t.watch(x))); }, {&x}) < 1e-6);
  }

  TEST_CASE("gradients of stacking, broadcasting and picking") {
    Parameter x = param("x", {3, 4}, 4);
    Parameter b = param("b", {4}, 5);
    Parameter v = param("v", {4}, 6);
    CHECK(check([&](Tape& t) { return readout(t, add_row_broadcast(t.watch(x), t.watch(b)), 9); }, {&x, &b}) < 1e-6);
    CHECK(check(
              [&](Tape& t) {
                std::vector<Var> rows = {t.watch(v), t.watch(b), t.watch(v)};
                return readout(t, stack_rows(rows), 9);
              },
              {&v, &b}) < 1e-6);
    CHECK(check(
              [&](Tape& t) {
                std::vector<Var> terms = {t.watch(v), t.watch(b), t.watch(v)};
                return readout(t, add_n(terms), 9);
              },
              {&v, &b}) < 1e-6);
    std::vector<std::size_t> cols = {3, 0, 2};
    CHECK(check([&](Tape& t) { return readout(t, pick_rows(t.watch(x), cols), 9); }, {&x}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, element(t.watch(v), 2), 9); }, {&v}) < 1e-6);
  }

  TEST_CASE("gradients of softmax family") {
    Parameter v = param("v", {6}, 7);
    Parameter x = param("x", {3, 5}, 8);
    CHECK(check([&](Tape& t) { return readout(t, softmax(t.watch(v)), 9); }, {&v}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, softmax(t.watch(v), 0.2), 9); }, {&v}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, log_softmax_rows(t.watch(x)), 9); }, {&x}) < 1e-6);
    CHECK(check([&](Tape& t) { return readout(t, log(softmax(t.watch(v))), 9); }, {&v}) < 1e-6);
  }

  TEST_CASE("gradients of cosine ops") {
    Parameter u = param("u", {5, 4}, 10);
    Parameter d = param("d", {5, 4}, 11);
    CHECK(check([&](Tape& t) { return readout(t, cosine_similarity_matrix(t.watch(u), t.watch(d)), 9); }, {&u, &d}) <
          1e-6);
    CHECK(check([&](Tape& t) { return readout(t, rowwise_cosine(t.watch(u), t.watch(d)), 9); }, {&u, &d}) < 1e-6);
  }

  TEST_CASE("diagonal log-softmax matches a loop and has correct gradients") {
    std::mt19937_64 rng(12);
    auto m = oracle::random_matrix(4, 4, rng);
    Tape tape;
    Var x = tape.constant(testing::to_tensor(m));
    auto rows = diagonal_log_softmax(x, 0.5, Axis::rows).value();
    auto cols = diagonal_log_softmax(x, 0.5, Axis::cols).value();
    for (std::size_t i = 0; i < 4; ++i) {
      std::vector<double> r(4), c(4);
      for (std::size_t j = 0; j < 4; ++j) {
        r[j] = m[i][j] / 0.5;
        c[j] = m[j][i] / 0.5;
      }
      CHECK(rows[i] == doctest::Approx(oracle::log_softmax_at(r, i)).epsilon(1e-13));
      CHECK(cols[i] == doctest::Approx(oracle::log_softmax_at(c, i)).epsilon(1e-13));
    }
    Parameter p = param("p", {4, 4}, 13);
    CHECK(check([&](Tape& t) { return readout(t, diagonal_log_softmax(t.watch(p), 0.2, Axis::rows), 9); }, {&p}) <
          1e-4);
    CHECK(check([&](Tape& t) { return readout(t, diagonal_log_softmax(t.watch(p), 0.2, Axis::cols), 9); }, {&p}) <
          1e-4);
  }

  TEST_CASE("mask_diagonal replaces the diagonal and blocks its gradient") {
    Parameter p = param("p", {3, 3}, 14);
    Tape tape;
    Var m = mask_diagonal(tape.watch(p), -5.0);
    CHECK(m.value().at(1, 1) == -5.0);
    CHECK(m.value().at(0, 1) == p.value.at(0, 1));
    tape.backward(sum(m));
    CHECK(p.grad.at(2, 2) == 0.0);
    CHECK(p.grad.at(2, 1) == 1.0);
  }

  TEST_CASE("backward accumulates into parameters and skips references") {
    Parameter p("p", Tensor::vector({1.0, 2.0}));
    Tensor frozen = Tensor::vector({3.0, 4.0});
    Tape tape;
    Var a = tape.watch(p);
    Var r = tape.reference(frozen);
    CHECK_FALSE(r.requires_grad());
    tape.backward(sum(add(add(a, a), r)));
    CHECK(p.grad[0] == 2.0);
    CHECK(p.grad[1] == 2.0);
    CHECK(frozen[0] == 3.0);
  }

  TEST_CASE("contract violations are reported") {
    Tape tape;
    Var a = tape.constant(Tensor({2, 3}));
    Var b = tape.constant(Tensor({2, 3}));
    CHECK_THROWS_AS(matmul(a, b), ContractError);
    CHECK_THROWS_AS(hsplit(a), ContractError);
    CHECK_THROWS_AS(tape.backward(a), ContractError);
  }

  TEST_CASE("non-finite forward values raise") {
    Tape tape;
    Var a = tape.constant(Tensor::vector({std::numeric_limits<double>::infinity(), 1.0}));
    CHECK_THROWS_AS(softmax(a), NonFiniteError);
  }
}
