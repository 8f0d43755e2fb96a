#include "geig/direct.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geig/errors.hpp"

namespace geig {

ProfileCholesky::ProfileCholesky(const SparseOperator& a) : n_(a.rows()) {
  if (a.rows() != a.cols()) throw InvalidArgument("cholesky: matrix is not square");
  first_.resize(n_);
  offset_.resize(n_ + 1, 0);
  // Envelope of the lower triangle; use both A_ij and A_ji so a slightly
  // asymmetric pattern still gets a valid envelope.
  for (std::size_t i = 0; i < n_; ++i) first_[i] = i;
  for (std::size_t i = 0; i < n_; ++i) {
    for (auto j : a.row_cols(i)) {
      if (j < i) first_[i] = std::min(first_[i], j);
      else if (j > i) first_[j] = std::min(first_[j], i);
    }
  }
  for (std::size_t i = 0; i < n_; ++i) offset_[i + 1] = offset_[i] + (i - first_[i] + 1);
  values_.assign(offset_[n_], 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p)
      if (c[p] <= i) values_[offset_[i] + (c[p] - first_[i])] = v[p];
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double* li = values_.data() + offset_[i];
    const std::size_t fi = first_[i];
    for (std::size_t j = fi; j < i; ++j) {
      const double* lj = values_.data() + offset_[j];
      const std::size_t fj = first_[j];
      const std::size_t start = std::max(fi, fj);
      double s = li[j - fi];
      for (std::size_t p = start; p < j; ++p) s -= li[p - fi] * lj[p - fj];
      li[j - fi] = s / lj[j - fj];
    }
    double d = li[i - fi];
    for (std::size_t p = fi; p < i; ++p) d -= li[p - fi] * li[p - fi];
    if (!(d > 0.0))
      throw NotPositiveDefinite("cholesky: nonpositive pivot at row " + std::to_string(i));
    li[i - fi] = std::sqrt(d);
  }
}

void ProfileCholesky::solve_in_place(std::span<double> x) const {
  if (x.size() != n_) throw InvalidArgument("cholesky solve: dimension mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    const double* li = values_.data() + offset_[i];
    double s = x[i];
    for (std::size_t p = first_[i]; p < i; ++p) s -= li[p - first_[i]] * x[p];
    x[i] = s / li[i - first_[i]];
  }
  for (std::size_t i = n_; i-- > 0;) {
    const double* li = values_.data() + offset_[i];
    x[i] /= li[i - first_[i]];
    const double xi = x[i];
    for (std::size_t p = first_[i]; p < i; ++p) x[p] -= li[p - first_[i]] * xi;
  }
}

Vector ProfileCholesky::solve(std::span<const double> b) const {
  Vector x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

Vector direct_solve(const SparseOperator& a, std::span<const double> b) {
  if (b.size() != a.rows()) throw InvalidArgument("direct_solve: dimension mismatch");
  const ProfileCholesky chol(a);
  Vector x = chol.solve(b);
  Vector r = spmv(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  chol.solve_in_place(r);
  axpy(1.0, r, x);
  return x;
}

}  // namespace geig
