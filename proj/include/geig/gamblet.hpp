#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "geig/dense.hpp"
#include "geig/hierarchy.hpp"
#include "geig/sparse.hpp"

namespace geig {

enum class TransformMode { exact, localized };

/// gamblet: interpolation corrected by the operator (the default).
/// geometric: plain nesting matrices as interpolation, used as a baseline.
enum class Interpolation { gamblet, geometric };

struct TransformOptions {
  TransformMode mode = TransformMode::exact;
  // Localized mode: level-(k-1) cells within this Chebyshev distance of cell i
  // form the patch on which row i of the correction is solved.
  std::size_t radius = 3;
  double droptol = 1e-9;    // relative to the largest entry of each interpolation row
  double local_tol = 1e-6;  // CG relative residual on a patch
  Interpolation interpolation = Interpolation::gamblet;
  bool track_vectors = false;
};

/// Per-level operators, 1-based level accessors. Level q is the fine space.
class GambletDecomposition {
 public:
  std::size_t levels() const { return a_.size(); }
  const TransformOptions& options() const { return options_; }

  const SparseOperator& A(std::size_t k) const { return a_.at(k - 1); }
  const SparseOperator& B(std::size_t k) const { return b_.at(k - 2); }
  const SparseOperator& W(std::size_t k) const { return w_.at(k - 2); }
  /// Interpolation from level k to level k-1 (rows index level k-1).
  const SparseOperator& R(std::size_t k) const { return r_.at(k - 2); }

  bool tracks_vectors() const { return !psi_.empty(); }

  /// Level-k coefficients of a level-(k-1) vector: R(k)ᵀ x.
  Vector prolong(std::size_t k, std::span<const double> coarse) const;
  /// R(k) x.
  Vector restrict_to_coarse(std::size_t k, std::span<const double> fine) const;
  /// Repeated prolongation from level `from` up to level `to`.
  Vector prolong_to(std::size_t from, std::size_t to, std::span<const double> v) const;

  // Assembled by transform() and load_decomposition().
  TransformOptions options_;
  std::vector<SparseOperator> a_;
  std::vector<SparseOperator> b_;
  std::vector<SparseOperator> w_;
  std::vector<SparseOperator> r_;
  std::vector<SparseOperator> psi_;  // rows: ψ_i^(k) on the fine basis
  std::vector<SparseOperator> chi_;  // rows: χ_i^(k), k >= 2
};

/// Level operators from the fine level down. NotPositiveDefinite if a pivot
/// or CG step breaks down, InvalidArgument on inconsistent sizes or radius < 1.
GambletDecomposition transform(const SparseOperator& a_fine, const MeasurementChain& chain,
                               const TransformOptions& options = {});

/// Dense reference: Θ = Π A⁻¹ Πᵀ and its inverse.
std::pair<DenseSymMatrix, DenseSymMatrix> oracle_level_matrices(const SparseOperator& a_fine,
                                                                const SparseOperator& pi_k);

/// ψ^(k) and χ^(k) rows on the fine basis (χ^(1) = ψ^(1)). Throws
/// UnsupportedOperation when vectors were not tracked.
std::pair<SparseOperator, SparseOperator> wavelet_vectors(const GambletDecomposition& dec,
                                                          std::size_t k);

/// (n, energy of ψ_i^(k) outside the ball of radius n * width(k) around its
/// cell center), n = 0..n_max. The energy is split into pair terms
/// -a_ij (ψ_i - ψ_j)² at pair midpoints and row-sum terms at nodes, so n = 0
/// is the full energy and the tail never increases. Works with or without
/// vector tracking.
std::vector<std::pair<std::size_t, double>> decay_profile(const GambletDecomposition& dec,
                                                          const MeasurementChain& chain,
                                                          std::size_t k, std::size_t i,
                                                          std::size_t n_max);

/// Fine-space pieces of A⁻¹ g: element 0 is the level-1 part, element k-1
/// (k >= 2) the part living in the level-k wavelet space. They sum to A⁻¹ g
/// when the decomposition is exact.
std::vector<Vector> gamblet_components(const GambletDecomposition& dec, std::span<const double> g);

/// λmax/λmin of a symmetric positive definite matrix: dense Jacobi up to 400
/// unknowns, Lanczos with full reorthogonalization beyond.
double condition_number(const SparseOperator& a);

/// Directory with A_k.coo, B_k.coo, W_k.coo, R_k.coo coordinate files and manifest.json.
void save_decomposition(const std::string& dir, const GambletDecomposition& dec);
GambletDecomposition load_decomposition(const std::string& dir);

}  // namespace geig
