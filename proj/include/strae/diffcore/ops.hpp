#pragma once

#include <span>
#include <utility>
#include <vector>

#include "strae/diffcore/tape.hpp"

namespace strae::diff {

/// Added to the norm product of every cosine similarity.
inline constexpr double kCosineEpsilon = 1e-8;
/// Floor applied before taking logarithms of probabilities.
inline constexpr double kLogFloor = 1e-12;

// ---- value-level helpers (no tape) --------------------------------------

/// exp(x_k/tau) / sum_m exp(x_m/tau), computed with max subtraction.
std::vector<double> tempered_softmax(std::span<const double> x, double tau);

/// A_ij = <U_i, D_j> / (|U_i| |D_j| + eps) for rank-2 U (M x d), D (M' x d).
Tensor cosine_similarity_matrix(const Tensor& u, const Tensor& d, double eps = kCosineEpsilon);

double cosine(std::span<const double> a, std::span<const double> b, double eps = kCosineEpsilon);

// ---- recorded operations --------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);
Var tanh(Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var x, double factor);
/// Adds a length-K bias to every row of an M x K matrix.
Var add_row_broadcast(Var x, Var bias);
/// Elementwise sum of equally shaped vars.
Var add_n(std::span<const Var> terms);

/// Horizontal concatenation of M x K1 and M x K2 into M x (K1 + K2).
Var hcat(Var a, Var b);
Var col_slice(Var x, std::size_t begin, std::size_t count);
/// Splits an M x 2K matrix at column K.
std::pair<Var, Var> hsplit(Var x);

Var reshape(Var x, Shape shape);
/// N x N matrix to a length N^2 vector, row-major.
Var flatten(Var x);
/// Length N^2 vector to an N x N matrix, row-major. N^2 must be a perfect square.
Var square(Var x);

/// Row `i` of a rank-2 tensor as a vector.
Var row(Var matrix, std::size_t i);
/// Flattens each input and stacks them as the rows of an M x d matrix.
Var stack_rows(std::span<const Var> rows);

/// Tempered softmax of a vector.
Var softmax(Var x, double tau = 1.0);
/// Row-wise log-softmax of a matrix.
Var log_softmax_rows(Var x);
/// log(max(x, floor)); the gradient is zero where the floor is active.
Var log(Var x, double floor = kLogFloor);

/// Single element of a vector, as a scalar.
Var element(Var x, std::size_t i);
/// out_i = x[i, columns[i]] for an M x K matrix.
Var pick_rows(Var x, std::span<const std::size_t> columns);

Var sum(Var x);
Var mean(Var x);

Var cosine_similarity_matrix(Var u, Var d, double eps = kCosineEpsilon);
/// out_i = cos(U_i, D_i).
Var rowwise_cosine(Var u, Var d, double eps = kCosineEpsilon);

enum class Axis { rows, cols };
/// For Axis::rows: out_i = log softmax(X_i. / tau)_i over an M x K matrix
/// with K >= M. For Axis::cols: out_j = log softmax(X_.j / tau)_j with M >= K.
/// The full probability matrix is never materialized.
Var diagonal_log_softmax(Var x, double tau, Axis axis);

/// Copy of a square matrix with its diagonal replaced by `value`; no
/// gradient flows through the replaced entries.
Var mask_diagonal(Var x, double value);

}  // namespace strae::diff
