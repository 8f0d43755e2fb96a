#include "geig/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "geig/errors.hpp"

namespace geig {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw InvalidArgument("dense matrix data size mismatch");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  return a;
}

Vector DenseMatrix::column(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> v) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseSymMatrix DenseSymMatrix::from_full(std::size_t n, std::span<const double> entries) {
  if (entries.size() != n * n) throw InvalidArgument("symmetric matrix data size mismatch");
  DenseSymMatrix s(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) s.set(i, j, 0.5 * (entries[i * n + j] + entries[j * n + i]));
  return s;
}

DenseSymMatrix DenseSymMatrix::from_sparse(const SparseOperator& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("from_sparse: matrix is not square");
  auto d = a.to_dense();
  return from_full(a.rows(), d);
}

DenseSymMatrix DenseSymMatrix::diagonal(std::span<const double> d) {
  DenseSymMatrix s(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) s.set(i, i, d[i]);
  return s;
}

double DenseSymMatrix::frobenius_norm() const { return norm2(data_); }

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("dense multiply: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double s = a(i, l);
      if (s == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += s * b(l, j);
    }
  return c;
}

Vector multiply(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw InvalidArgument("dense matvec: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

DenseSymMatrix congruence(const DenseMatrix& v, const DenseSymMatrix& s) {
  if (v.rows() != s.size()) throw InvalidArgument("congruence: dimension mismatch");
  const DenseMatrix sv = multiply(s.full(), v);
  DenseSymMatrix out(v.cols());
  for (std::size_t i = 0; i < v.cols(); ++i)
    for (std::size_t j = i; j < v.cols(); ++j) {
      double x = 0.0;
      for (std::size_t r = 0; r < v.rows(); ++r) x += v(r, i) * sv(r, j);
      out.set(i, j, x);
    }
  return out;
}

DenseMatrix cholesky(const DenseSymMatrix& a) {
  const std::size_t n = a.size();
  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
    if (!(d > 0.0))
      throw NotPositiveDefinite("cholesky: nonpositive pivot at row " + std::to_string(j));
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

namespace {

void forward(const DenseMatrix& l, std::span<double> x) {
  for (std::size_t i = 0; i < l.rows(); ++i) {
    double s = x[i];
    for (std::size_t p = 0; p < i; ++p) s -= l(i, p) * x[p];
    x[i] = s / l(i, i);
  }
}

void backward(const DenseMatrix& l, std::span<double> x) {
  for (std::size_t i = l.rows(); i-- > 0;) {
    double s = x[i];
    for (std::size_t p = i + 1; p < l.rows(); ++p) s -= l(p, i) * x[p];
    x[i] = s / l(i, i);
  }
}

}  // namespace

Vector cholesky_solve(const DenseMatrix& l, std::span<const double> b) {
  if (b.size() != l.rows()) throw InvalidArgument("cholesky_solve: dimension mismatch");
  Vector x(b.begin(), b.end());
  forward(l, x);
  backward(l, x);
  return x;
}

DenseSymMatrix spd_inverse(const DenseSymMatrix& a) {
  const std::size_t n = a.size();
  const DenseMatrix l = cholesky(a);
  DenseMatrix inv(n, n);
  Vector e(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    inv.set_column(j, cholesky_solve(l, e));
  }
  return DenseSymMatrix::from_full(n, inv.data());
}

SymEigen jacobi_eigen(const DenseSymMatrix& s) {
  const std::size_t n = s.size();
  DenseMatrix a = s.full();
  DenseMatrix v = DenseMatrix::identity(n);
  const double total = s.frobenius_norm();
  auto off_norm = [&] {
    double o = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) o += a(i, j) * a(i, j);
    return std::sqrt(o);
  };
  for (int sweep = 0; sweep < 100 && off_norm() > 1e-14 * total; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymEigen out{Vector(n), DenseMatrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

GeneralizedEigen dense_sym_geig(const DenseSymMatrix& k, const DenseSymMatrix& m) {
  if (k.size() != m.size()) throw InvalidArgument("dense_sym_geig: K and M sizes differ");
  const std::size_t n = k.size();
  const DenseMatrix l = cholesky(m);
  // C = L^{-1} K L^{-T}, built column by column.
  DenseMatrix c(n, n);
  {
    DenseMatrix y(n, n);  // Y = L^{-1} K
    for (std::size_t j = 0; j < n; ++j) {
      Vector col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = k(i, j);
      forward(l, col);
      y.set_column(j, col);
    }
    for (std::size_t i = 0; i < n; ++i) {
      Vector row(n);
      for (std::size_t j = 0; j < n; ++j) row[j] = y(i, j);
      forward(l, row);
      for (std::size_t j = 0; j < n; ++j) c(i, j) = row[j];
    }
  }
  const SymEigen eig = jacobi_eigen(DenseSymMatrix::from_full(n, c.data()));
  GeneralizedEigen out{eig.values, DenseMatrix(n, n), DenseMatrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    Vector x = eig.vectors.column(j);
    backward(l, x);
    out.vectors.set_column(j, x);
    const double lam = eig.values[j];
    const double scale = lam > 0.0 ? 1.0 / std::sqrt(lam) : 1.0;
    for (auto& xi : x) xi *= scale;
    out.energy_vectors.set_column(j, x);
  }
  return out;
}

}  // namespace geig
