#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "geig/direct.hpp"
#include "geig/gamblet.hpp"
#include "geig/sparse.hpp"

namespace geig {

enum class Smoother { richardson, gauss_seidel };

/// Where the coarse correction takes its residual: at the incoming iterate
/// (the default) or after presmoothing (the textbook choice).
enum class ResidualPoint { initial, presmoothed };

struct MgParams {
  std::size_t m1 = 2;
  std::size_t m2 = 2;
  std::size_t p = 1;  // 1: V-cycle, 2: W-cycle
  Smoother smoother = Smoother::gauss_seidel;
  double lambda_bound_factor = 1.0;
  ResidualPoint residual_at = ResidualPoint::initial;
};

/// Throws InvalidArgument naming the offending field.
void validate(const MgParams& params);

/// Largest absolute row sum times factor; bounds the spectral radius.
double estimate_lambda_bound(const SparseOperator& a, double factor = 1.0);

/// Level-k multigrid iteration over a gamblet decomposition. Holds the
/// per-level spectral bounds and the coarsest-level factorization; all
/// methods are const and allocate their own workspaces.
class Multigrid {
 public:
  Multigrid(const GambletDecomposition& dec, MgParams params);

  const GambletDecomposition& decomposition() const { return *dec_; }
  const MgParams& params() const { return params_; }
  double lambda_bound(std::size_t k) const { return lambda_.at(k - 1); }

  /// One iteration for A^(k) z = g starting from z0. Level 1 is solved directly.
  Vector cycle(std::size_t k, std::span<const double> z0, std::span<const double> g) const;

  /// Repeats cycle() from zero until ||g - A z|| <= tol ||g||. Returns the
  /// iterate and the number of cycles; NonConvergence after max_cycles.
  std::pair<Vector, std::size_t> solve(std::size_t k, std::span<const double> g, double tol,
                                       std::size_t max_cycles) const;

  /// One fine-level V-cycle from zero with presmoothed residual, m1 = m2
  /// and symmetric sweeps, so r -> z is a symmetric positive definite map.
  Vector precondition(std::span<const double> r) const;

 private:
  Vector run(std::size_t k, std::span<const double> z0, std::span<const double> g,
             const MgParams& prm, bool symmetric) const;
  void smooth(std::size_t k, std::span<const double> g, std::span<double> z, std::size_t steps,
              const MgParams& prm, bool descending) const;

  const GambletDecomposition* dec_;
  MgParams params_;
  std::vector<double> lambda_;
  ProfileCholesky coarse_;
};

/// Convenience form building a Multigrid for a single call.
Vector mg(std::size_t k, std::span<const double> z0, std::span<const double> g,
          const GambletDecomposition& dec, const MgParams& params);

/// Largest per-cycle energy-norm error reduction over `cycles` iterations on
/// A^(k) z = 0 from a seeded random start.
double measure_contraction(const Multigrid& mg, std::size_t k, std::size_t cycles,
                           std::uint64_t seed);

}  // namespace geig
