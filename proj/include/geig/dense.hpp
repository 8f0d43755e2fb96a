#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geig/sparse.hpp"

namespace geig {

/// Row-major dense matrix. Column j of an eigenvector matrix is pair j.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Vector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);
  DenseMatrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Symmetric dense matrix; every write touches (i,j) and (j,i), so the stored
/// entries are exactly symmetric.
class DenseSymMatrix {
 public:
  DenseSymMatrix() = default;
  explicit DenseSymMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}
  /// Averages the input with its transpose.
  static DenseSymMatrix from_full(std::size_t n, std::span<const double> entries);
  static DenseSymMatrix from_sparse(const SparseOperator& a);
  static DenseSymMatrix diagonal(std::span<const double> d);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  std::span<const double> data() const { return data_; }
  DenseMatrix full() const { return DenseMatrix(n_, n_, data_); }
  double frobenius_norm() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
Vector multiply(const DenseMatrix& a, std::span<const double> x);
/// Vᵀ S V for symmetric S.
DenseSymMatrix congruence(const DenseMatrix& v, const DenseSymMatrix& s);

/// Lower-triangular L with A = L Lᵀ; NotPositiveDefinite on a nonpositive pivot.
DenseMatrix cholesky(const DenseSymMatrix& a);
/// Solves L Lᵀ x = b given the factor.
Vector cholesky_solve(const DenseMatrix& l, std::span<const double> b);
/// A^{-1} for SPD A.
DenseSymMatrix spd_inverse(const DenseSymMatrix& a);

struct SymEigen {
  Vector values;        // ascending
  DenseMatrix vectors;  // orthonormal columns
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is below
/// 1e-14 of the total.
SymEigen jacobi_eigen(const DenseSymMatrix& a);

struct GeneralizedEigen {
  Vector values;               // ascending
  DenseMatrix vectors;         // columns with xᵀ M x = 1
  DenseMatrix energy_vectors;  // same directions scaled to xᵀ K x = 1 (left as is if λ <= 0)
};

/// All pairs of K x = λ M x via Cholesky of M and Jacobi on L⁻¹ K L⁻ᵀ.
GeneralizedEigen dense_sym_geig(const DenseSymMatrix& k, const DenseSymMatrix& m);

}  // namespace geig
