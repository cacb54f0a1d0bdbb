#include "strae/diffcore/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "strae/error.hpp"

namespace strae::diff {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.value().rank() != rank) {
    throw ContractError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                        to_string(v.shape()));
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> row_norms(const Tensor& m) {
  std::vector<double> norms(m.rows());
  const std::size_t c = m.cols();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.data().subspan(i * c, c);
    norms[i] = std::sqrt(dot(r, r));
  }
  return norms;
}

}  // namespace

std::vector<double> tempered_softmax(std::span<const double> x, double tau) {
  if (!(tau > 0.0)) throw ContractError("softmax temperature must be positive");
  if (x.empty()) throw ContractError("softmax of an empty vector");
  double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double z = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = std::exp((x[k] - mx) / tau);
    z += out[k];
  }
  for (double& v : out) v /= z;
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b, double eps) {
  if (a.size() != b.size()) throw ContractError("cosine: length mismatch");
  return dot(a, b) / (std::sqrt(dot(a, a)) * std::sqrt(dot(b, b)) + eps);
}

Tensor cosine_similarity_matrix(const Tensor& u, const Tensor& d, double eps) {
  if (u.rank() != 2 || d.rank() != 2 || u.cols() != d.cols()) {
    throw ContractError("cosine_similarity_matrix: operands must be M x d and M' x d");
  }
  auto un = row_norms(u);
  auto dn = row_norms(d);
  Eigen::Map<const Eigen::VectorXd> uv(un.data(), static_cast<Eigen::Index>(un.size()));
  Eigen::Map<const Eigen::VectorXd> dv(dn.data(), static_cast<Eigen::Index>(dn.size()));
  Tensor a({u.rows(), d.rows()});
  auto am = as_matrix(a);
  am.noalias() = as_matrix(u) * as_matrix(d).transpose();
  am.array() /= (uv * dv.transpose()).array() + eps;
  return a;
}

Var matmul(Var a, Var b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.value().cols() != b.value().rows()) {
    throw ContractError("matmul: inner dimensions differ: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Tensor out({a.value().rows(), b.value().cols()});
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  return a.tape().record("matmul", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) as_matrix(t.grad_of(a)).noalias() += as_matrix(g) * as_matrix(b.value()).transpose();
    if (b.requires_grad()) as_matrix(t.grad_of(b)).noalias() += as_matrix(a.value()).transpose() * as_matrix(g);
  });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  Tensor out({a.value().cols(), a.value().rows()});
  as_matrix(out) = as_matrix(a.value()).transpose();
  return a.tape().record("transpose", std::move(out), {a},
                         [a](Tape& t, const Tensor& g) { as_matrix(t.grad_of(a)) += as_matrix(g).transpose(); });
}

Var tanh(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::tanh(v);
  return x.tape().record("tanh", std::move(out), {x}, [x](Tape& t, const Tensor& g) {
    auto dx = t.grad_of(x).data();
    auto xv = x.value().data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      double y = std::tanh(xv[i]);
      dx[i] += g[i] * (1.0 - y * y);
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  accumulate(out, b.value());
  return a.tape().record("add", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) accumulate(t.grad_of(a), g);
    if (b.requires_grad()) accumulate(t.grad_of(b), g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  auto o = out.data();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return a.tape().record("sub", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) accumulate(t.grad_of(a), g);
    if (b.requires_grad()) {
      auto d = t.grad_of(b).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g[i];
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  return x.tape().record("scale", std::move(out), {x}, [x, factor](Tape& t, const Tensor& g) {
    auto d = t.grad_of(x).data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * g[i];
  });
}

Var add_row_broadcast(Var x, Var bias) {
  require_rank(x, 2, "add_row_broadcast");
  require_rank(bias, 1, "add_row_broadcast");
  const std::size_t m = x.value().rows(), k = x.value().cols();
  if (bias.value().size() != k) throw ContractError("add_row_broadcast: bias length must equal column count");
  Tensor out = x.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) += bias.value()[j];
  return x.tape().record("add_row_broadcast", std::move(out), {x, bias}, [x, bias, m, k](Tape& t, const Tensor& g) {
    if (x.requires_grad()) accumulate(t.grad_of(x), g);
    if (bias.requires_grad()) {
      auto d = t.grad_of(bias).data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) d[j] += g.at(i, j);
    }
  });
}

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw ContractError("add_n of zero terms");
  Tensor out = terms[0].value();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same_shape(terms[0], terms[i], "add_n");
    accumulate(out, terms[i].value());
  }
  std::vector<Var> inputs(terms.begin(), terms.end());
  return terms[0].tape().record("add_n", std::move(out), inputs, [inputs](Tape& t, const Tensor& g) {
    for (const Var& v : inputs)
      if (v.requires_grad()) accumulate(t.grad_of(v), g);
  });
}

Var hcat(Var a, Var b) {
  require_rank(a, 2, "hcat");
  require_rank(b, 2, "hcat");
  const std::size_t m = a.value().rows();
  if (b.value().rows() != m) throw ContractError("hcat: row counts differ");
  const std::size_t ka = a.value().cols(), kb = b.value().cols();
  Tensor out({m, ka + kb});
  as_matrix(out).leftCols(static_cast<Eigen::Index>(ka)) = as_matrix(a.value());
  as_matrix(out).rightCols(static_cast<Eigen::Index>(kb)) = as_matrix(b.value());
  return a.tape().record("hcat", std::move(out), {a, b}, [a, b, ka, kb](Tape& t, const Tensor& g) {
    if (a.requires_grad()) as_matrix(t.grad_of(a)) += as_matrix(g).leftCols(static_cast<Eigen::Index>(ka));
    if (b.requires_grad()) as_matrix(t.grad_of(b)) += as_matrix(g).rightCols(static_cast<Eigen::Index>(kb));
  });
}

Var col_slice(Var x, std::size_t begin, std::size_t count) {
  require_rank(x, 2, "col_slice");
  if (begin + count > x.value().cols()) throw ContractError("col_slice: range exceeds column count");
  const auto m = static_cast<Eigen::Index>(x.value().rows());
  Tensor out({x.value().rows(), count});
  as_matrix(out) = as_matrix(x.value()).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
  return x.tape().record("col_slice", std::move(out), {x}, [x, begin, count, m](Tape& t, const Tensor& g) {
    (void)m;
    as_matrix(t.grad_of(x)).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) +=
        as_matrix(g);
  });
}

std::pair<Var, Var> hsplit(Var x) {
  require_rank(x, 2, "hsplit");
  const std::size_t k = x.value().cols();
  if (k % 2 != 0) throw ContractError("hsplit: column count must be even");
  return {col_slice(x, 0, k / 2), col_slice(x, k / 2, k / 2)};
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record("reshape", std::move(out), {x},
                         [x](Tape& t, const Tensor& g) { accumulate(t.grad_of(x), g); });
}

Var flatten(Var x) {
  require_rank(x, 2, "flatten");
  return reshape(x, {x.value().size()});
}

Var square(Var x) {
  require_rank(x, 1, "square");
  const std::size_t len = x.value().size();
  auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(len))));
  if (n * n != len) throw ContractError("square: length " + std::to_string(len) + " is not a perfect square");
  return reshape(x, {n, n});
}

Var row(Var matrix, std::size_t i) {
  require_rank(matrix, 2, "row");
  const std::size_t r = matrix.value().rows(), c = matrix.value().cols();
  if (i >= r) throw ContractError("row: index " + std::to_string(i) + " out of range for " + std::to_string(r) + " rows");
  auto src = matrix.value().data().subspan(i * c, c);
  Tensor out = Tensor::vector(std::vector<double>(src.begin(), src.end()));
  return matrix.tape().record("row", std::move(out), {matrix}, [matrix, i, c](Tape& t, const Tensor& g) {
    auto d = t.grad_of(matrix).data().subspan(i * c, c);
    for (std::size_t k = 0; k < c; ++k) d[k] += g[k];
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw ContractError("stack_rows of zero rows");
  const std::size_t d = rows[0].value().size();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].value().size() != d) throw ContractError("stack_rows: rows differ in size");
    auto src = rows[i].value().data();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  return rows[0].tape().record("stack_rows", std::move(out), inputs, [inputs, d](Tape& t, const Tensor& g) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!inputs[i].requires_grad()) continue;
      auto dst = t.grad_of(inputs[i]).data();
      for (std::size_t k = 0; k < d; ++k) dst[k] += g[i * d + k];
    }
  });
}

Var softmax(Var x, double tau) {
  require_rank(x, 1, "softmax");
  Tensor out = Tensor::vector(tempered_softmax(x.value().data(), tau));
  Tape& tape = x.tape();
  return tape.record("softmax", std::move(out), {x}, [x, tau](Tape& t, const Tensor& g) {
    auto p = tempered_softmax(x.value().data(), tau);
    double inner = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) inner += g[k] * p[k];
    auto d = t.grad_of(x).data();
    for (std::size_t k = 0; k < p.size(); ++k) d[k] += p[k] * (g[k] - inner) / tau;
  });
}

Var log_softmax_rows(Var x) {
  require_rank(x, 2, "log_softmax_rows");
  const std::size_t m = x.value().rows(), k = x.value().cols();
  Tensor out({m, k});
  std::vector<double> lse(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, x.value().at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(x.value().at(i, j) - mx);
    lse[i] = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) = x.value().at(i, j) - lse[i];
  }
  return x.tape().record("log_softmax_rows", std::move(out), {x}, [x, lse, m, k](Tape& t, const Tensor& g) {
    auto& d = t.grad_of(x);
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < k; ++j) gs += g.at(i, j);
      for (std::size_t j = 0; j < k; ++j) d.at(i, j) += g.at(i, j) - std::exp(x.value().at(i, j) - lse[i]) * gs;
    }
  });
}

Var log(Var x, double floor) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::log(std::max(v, floor));
  return x.tape().record("log", std::move(out), {x}, [x, floor](Tape& t, const Tensor& g) {
    auto d = t.grad_of(x).data();
    auto xv = x.value().data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (xv[i] > floor) d[i] += g[i] / xv[i];
    }
  });
}

Var element(Var x, std::size_t i) {
  require_rank(x, 1, "element");
  if (i >= x.value().size()) throw ContractError("element: index out of range");
  return x.tape().record("element", Tensor::scalar(x.value()[i]), {x},
                         [x, i](Tape& t, const Tensor& g) { t.grad_of(x)[i] += g[0]; });
}

Var pick_rows(Var x, std::span<const std::size_t> columns) {
  require_rank(x, 2, "pick_rows");
  const std::size_t m = x.value().rows(), k = x.value().cols();
  if (columns.size() != m) throw ContractError("pick_rows: need one column index per row");
  std::vector<std::size_t> cols(columns.begin(), columns.end());
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    if (cols[i] >= k) throw ContractError("pick_rows: column index out of range");
    out[i] = x.value().at(i, cols[i]);
  }
  return x.tape().record("pick_rows", std::move(out), {x}, [x, cols](Tape& t, const Tensor& g) {
    auto& d = t.grad_of(x);
    for (std::size_t i = 0; i < cols.size(); ++i) d.at(i, cols[i]) += g[i];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record("sum", Tensor::scalar(s), {x}, [x](Tape& t, const Tensor& g) {
    for (double& d : t.grad_of(x).data()) d += g[0];
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0) throw ContractError("mean of an empty tensor");
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape().record("mean", Tensor::scalar(s / n), {x}, [x, n](Tape& t, const Tensor& g) {
    for (double& d : t.grad_of(x).data()) d += g[0] / n;
  });
}

Var cosine_similarity_matrix(Var u, Var d, double eps) {
  require_rank(u, 2, "cosine_similarity_matrix");
  require_rank(d, 2, "cosine_similarity_matrix");
  Tensor a = cosine_similarity_matrix(u.value(), d.value(), eps);
  return u.tape().record("cosine_similarity_matrix", std::move(a), {u, d}, [u, d, eps](Tape& t, const Tensor& g) {
    const Tensor& uv = u.value();
    const Tensor& dv = d.value();
    auto un_vec = row_norms(uv);
    auto dn_vec = row_norms(dv);
    Eigen::Map<const Eigen::VectorXd> un(un_vec.data(), static_cast<Eigen::Index>(un_vec.size()));
    Eigen::Map<const Eigen::VectorXd> dn(dn_vec.data(), static_cast<Eigen::Index>(dn_vec.size()));
    // s_ij = |U_i||D_j| + eps; W = G / s; A = dots / s.
    RowMatrix s = (un * dn.transpose()).array() + eps;
    RowMatrix w = as_matrix(g).array() / s.array();
    RowMatrix wa = as_matrix(uv) * as_matrix(dv).transpose();
    wa.array() *= w.array() / s.array();
    Eigen::VectorXd u_radial = wa * dn;
    Eigen::VectorXd d_radial = wa.transpose() * un;
    if (u.requires_grad()) {
      auto gu = as_matrix(t.grad_of(u));
      gu.noalias() += w * as_matrix(dv);
      for (Eigen::Index i = 0; i < gu.rows(); ++i) {
        if (un(i) > 0.0) gu.row(i) -= (u_radial(i) / un(i)) * as_matrix(uv).row(i);
      }
    }
    if (d.requires_grad()) {
      auto gd = as_matrix(t.grad_of(d));
      gd.noalias() += w.transpose() * as_matrix(uv);
      for (Eigen::Index j = 0; j < gd.rows(); ++j) {
        if (dn(j) > 0.0) gd.row(j) -= (d_radial(j) / dn(j)) * as_matrix(dv).row(j);
      }
    }
  });
}

Var rowwise_cosine(Var u, Var d, double eps) {
  require_rank(u, 2, "rowwise_cosine");
  require_same_shape(u, d, "rowwise_cosine");
  const std::size_t m = u.value().rows(), k = u.value().cols();
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = cosine(u.value().data().subspan(i * k, k), d.value().data().subspan(i * k, k), eps);
  }
  return u.tape().record("rowwise_cosine", std::move(out), {u, d}, [u, d, m, k, eps](Tape& t, const Tensor& g) {
    for (std::size_t i = 0; i < m; ++i) {
      auto ui = u.value().data().subspan(i * k, k);
      auto di = d.value().data().subspan(i * k, k);
      double nu = std::sqrt(dot(ui, ui)), nd = std::sqrt(dot(di, di));
      double s = nu * nd + eps;
      double c = dot(ui, di) / s;
      double w = g[i] / s;
      if (u.requires_grad()) {
        auto gu = t.grad_of(u).data().subspan(i * k, k);
        for (std::size_t j = 0; j < k; ++j) gu[j] += w * di[j] - (nu > 0 ? g[i] * c * nd / s * ui[j] / nu : 0.0);
      }
      if (d.requires_grad()) {
        auto gd = t.grad_of(d).data().subspan(i * k, k);
        for (std::size_t j = 0; j < k; ++j) gd[j] += w * ui[j] - (nd > 0 ? g[i] * c * nu / s * di[j] / nd : 0.0);
      }
    }
  });
}

Var diagonal_log_softmax(Var x, double tau, Axis axis) {
  require_rank(x, 2, "diagonal_log_softmax");
  if (!(tau > 0.0)) throw ContractError("diagonal_log_softmax: temperature must be positive");
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), k = xv.cols();
  const bool by_rows = axis == Axis::rows;
  const std::size_t count = by_rows ? m : k;   // number of softmax groups
  const std::size_t length = by_rows ? k : m;  // entries per group
  if (length < count) throw ContractError("diagonal_log_softmax: groups shorter than the diagonal");
  const auto xs = as_matrix(xv).array() / tau;
  const auto rows = static_cast<Eigen::Index>(m);

  // Row groups reduce along each contiguous row; column groups accumulate
  // row by row so the matrix is always read in storage order.
  Eigen::ArrayXd lse(static_cast<Eigen::Index>(count));
  if (by_rows) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      double mx = xs.row(i).maxCoeff();
      lse(i) = mx + std::log((xs.row(i) - mx).exp().sum());
    }
  } else {
    Eigen::Array<double, 1, Eigen::Dynamic> mx = xs.row(0);
    for (Eigen::Index i = 1; i < rows; ++i) mx = mx.max(xs.row(i));
    Eigen::Array<double, 1, Eigen::Dynamic> z = Eigen::Array<double, 1, Eigen::Dynamic>::Zero(mx.size());
    for (Eigen::Index i = 0; i < rows; ++i) z += (xs.row(i) - mx).exp();
    lse = (mx + z.log()).transpose();
  }
  Tensor out({count});
  for (std::size_t gi = 0; gi < count; ++gi) out[gi] = xv.at(gi, gi) / tau - lse(static_cast<Eigen::Index>(gi));

  return x.tape().record("diagonal_log_softmax", std::move(out), {x}, [x, tau, by_rows, count, lse](Tape& t, const Tensor& g) {
    const auto xs = as_matrix(x.value()).array() / tau;
    auto d = as_matrix(t.grad_of(x));
    Eigen::Map<const Eigen::ArrayXd> gv(g.data().data(), static_cast<Eigen::Index>(count));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      if (by_rows) {
        d.row(i).array() -= (xs.row(i) - lse(i)).exp() * (gv(i) / tau);
      } else {
        d.row(i).array() -= (xs.row(i) - lse.transpose()).exp() * gv.transpose() / tau;
      }
    }
    for (std::size_t gi = 0; gi < count; ++gi) {
      auto i = static_cast<Eigen::Index>(gi);
      d(i, i) += gv(i) / tau;
    }
  });
}

Var mask_diagonal(Var x, double value) {
  require_rank(x, 2, "mask_diagonal");
  const std::size_t m = x.value().rows();
  if (x.value().cols() != m) throw ContractError("mask_diagonal: matrix must be square");
  Tensor out = x.value();
  for (std::size_t i = 0; i < m; ++i) out.at(i, i) = value;
  return x.tape().record("mask_diagonal", std::move(out), {x}, [x, m](Tape& t, const Tensor& g) {
    auto& d = t.grad_of(x);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) d.at(i, j) += g.at(i, j);
  });
}

}  // namespace strae::diff
