#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geig/sparse.hpp"

namespace geig {

/// Envelope (skyline) Cholesky factor of a sparse SPD matrix in its given
/// ordering. Fill is confined to each row's envelope, so banded matrices such
/// as grid operators in natural ordering factor cheaply.
class ProfileCholesky {
 public:
  ProfileCholesky() = default;
  /// Throws NotPositiveDefinite on a nonpositive pivot, InvalidArgument if A is not square.
  explicit ProfileCholesky(const SparseOperator& a);

  std::size_t size() const { return n_; }
  std::size_t stored_entries() const { return values_.size(); }

  Vector solve(std::span<const double> b) const;
  /// In-place variant for hot loops.
  void solve_in_place(std::span<double> x) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> first_;   // first stored column of row i
  std::vector<std::size_t> offset_;  // start of row i in values_
  std::vector<double> values_;       // L(i, first_[i]..i)
};

/// x with A x = b; one refinement step keeps ||Ax - b|| near rounding level.
Vector direct_solve(const SparseOperator& a, std::span<const double> b);

}  // namespace geig
