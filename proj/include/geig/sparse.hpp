#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace geig {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed-sparse-row matrix. Immutable once built; column indices are
/// strictly increasing within each row.
class SparseOperator {
 public:
  SparseOperator() = default;

  /// Validates the CSR invariants and throws InvalidArgument on violation.
  SparseOperator(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_offsets,
                 std::vector<std::size_t> col_indices, std::vector<double> values,
                 bool symmetric = false);

  /// Duplicate (row, col) entries are summed. Explicit zeros are kept.
  static SparseOperator from_triplets(std::size_t nrows, std::size_t ncols,
                                      std::vector<Triplet> entries, bool symmetric = false);
  static SparseOperator identity(std::size_t n);
  static SparseOperator diagonal(std::span<const double> d);
  /// Row-major dense input; exact zeros are not stored.
  static SparseOperator from_dense(std::size_t nrows, std::size_t ncols,
                                   std::span<const double> entries, bool symmetric = false);

  std::size_t rows() const { return nrows_; }
  std::size_t cols() const { return ncols_; }
  std::size_t nnz() const { return values_.size(); }
  bool empty() const { return nrows_ == 0 && ncols_ == 0; }

  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::size_t> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }

  /// Entry lookup by binary search; 0 for entries outside the pattern.
  double at(std::size_t i, std::size_t j) const;
  Vector diagonal_entries() const;

  /// Flag set by constructors that guarantee symmetry (assembly, Galerkin products).
  bool flagged_symmetric() const { return symmetric_; }
  /// |v_ij - v_ji| <= rel_tol * max|values| with matching patterns.
  bool is_symmetric(double rel_tol = 1e-12) const;

  /// y = A x, y must already have rows() entries.
  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector apply(std::span<const double> x) const;

  SparseOperator transpose() const;
  SparseOperator scaled(double alpha) const;
  /// Principal submatrix on the sorted index set `keep`.
  SparseOperator principal_submatrix(std::span<const std::size_t> keep) const;

  std::vector<double> to_dense() const;
  double max_abs() const;
  double frobenius_norm() const;

 private:
  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> col_indices_;
  std::vector<double> values_;
  bool symmetric_ = false;
};

/// y = A x; throws InvalidArgument on dimension mismatch.
Vector spmv(const SparseOperator& a, std::span<const double> x);

/// C = A B (Gustavson, exact product pattern, no dropping).
SparseOperator multiply(const SparseOperator& a, const SparseOperator& b);

/// alpha A + beta B on the union pattern.
SparseOperator add(const SparseOperator& a, const SparseOperator& b, double alpha = 1.0,
                   double beta = 1.0);

/// R A R^T for symmetric A, flagged symmetric and exactly symmetrized.
SparseOperator galerkin_triple(const SparseOperator& r, const SparseOperator& a);

/// Relative Frobenius distance ||A - B||_F / ||B||_F (absolute if B = 0).
double relative_difference(const SparseOperator& a, const SparseOperator& b);

/// Coordinate dump: one "i j value" line per stored entry, 0-based, 17 significant digits.
void write_coordinate(std::ostream& out, const SparseOperator& a);
SparseOperator read_coordinate(std::istream& in, std::size_t nrows, std::size_t ncols,
                               bool symmetric = false);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// x^T A y
double inner(const SparseOperator& a, std::span<const double> x, std::span<const double> y);

}  // namespace geig
