#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "geig/eigensolver.hpp"
#include "geig/multigrid.hpp"
#include "geig/sparse.hpp"

namespace geig {

/// Symmetric positive definite action r -> B⁻¹ r. Implementations must be
/// safe to call concurrently on distinct vectors.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Vector apply(std::span<const double> r) const = 0;
  virtual std::string name() const = 0;
};

class IdentityPreconditioner : public Preconditioner {
 public:
  Vector apply(std::span<const double> r) const override { return {r.begin(), r.end()}; }
  std::string name() const override { return "identity"; }
};

/// r_i / K_ii.
class JacobiPreconditioner : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const SparseOperator& k);
  Vector apply(std::span<const double> r) const override;
  std::string name() const override { return "jacobi"; }

 private:
  Vector inv_diag_;
};

/// One symmetric fine-level V-cycle of the gamblet multigrid.
class GambletPreconditioner : public Preconditioner {
 public:
  explicit GambletPreconditioner(const Multigrid& mg) : mg_(&mg) {}
  Vector apply(std::span<const double> r) const override { return mg_->precondition(r); }
  std::string name() const override { return "gamblet"; }

 private:
  const Multigrid* mg_;
};

/// xᵀKx / xᵀMx; InvalidArgument for x = 0.
double rayleigh_quotient(std::span<const double> x, const SparseOperator& k,
                         const SparseOperator& m);

struct PinvitStep {
  Vector x;            // M-normalized
  double mu = 0.0;     // Rayleigh quotient of the input
  bool restarted = false;
};

/// w = B⁻¹(Kx - μ(x) M x), x_next = (x - w)/||x - w||_M. If x - w vanishes
/// the step restarts from a seeded random vector and says so.
PinvitStep pinvit_step(std::span<const double> x, const SparseOperator& k, const SparseOperator& m,
                       const Preconditioner& b, std::uint64_t restart_seed = 1);

struct LobpcgParams {
  double tol = 1e-8;        // on ||K x - λ M x|| / ||K x||
  std::size_t maxit = 500;
  std::size_t level = 0;    // level label written to the history
  std::size_t first_sweep = 0;
  std::string phase = "lobpcg";
};

struct LobpcgResult {
  EigenSet set;  // energy-normalized like every EigenSet
  ConvergenceRecord record;
  std::size_t iterations = 0;
};

/// Block LOBPCG on (K, M) with soft locking: converged columns stay in X but
/// contribute no new directions. Trial basis [X, W, P] is M-orthonormalized
/// with reorthogonalization and 1e-12 drop threshold before each
/// Rayleigh-Ritz. SolverNonConvergence after maxit iterations.
LobpcgResult lobpcg(const SparseOperator& k, const SparseOperator& m, const Preconditioner& b,
                    const std::vector<Vector>& x0, const LobpcgParams& params);

/// Multilevel correction to mc_params.tol, then LOBPCG with the gamblet
/// preconditioner from that block. Rows are tagged "mc" and "lobpcg".
LobpcgResult hybrid_solve(const GambletDecomposition& dec, const LevelPencils& pencils,
                          std::size_t nev, const McParams& mc_params,
                          const LobpcgParams& lobpcg_params);

}  // namespace geig
