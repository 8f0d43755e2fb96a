#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "geig/dense.hpp"
#include "geig/direct.hpp"
#include "geig/errors.hpp"
#include "geig/gamblet.hpp"
#include "geig/multigrid.hpp"
#include "geig/sparse.hpp"

namespace geig {

/// Approximate eigenpairs on one level of a decomposition, ascending, each
/// vector scaled to vᵀ K v = 1. residuals[i] = ||K v - λ M v|| / ||K v||.
struct EigenSet {
  std::size_t level = 0;
  std::vector<double> lambdas;
  std::vector<Vector> vectors;
  std::vector<double> residuals;

  std::size_t nev() const { return lambdas.size(); }
};

struct HistoryRow {
  std::size_t sweep = 0;
  std::size_t level = 0;
  std::size_t pair = 0;
  double lambda = 0.0;
  double rel_change = 0.0;
  double residual = 0.0;
  std::string phase;
};

/// Per-sweep, per-pair trace of a solver run.
struct ConvergenceRecord {
  std::vector<HistoryRow> rows;

  /// Header "sweep,level,pair,lambda,rel_change,residual", plus ",phase"
  /// when requested; numbers printed with 17 significant digits.
  void write_csv(std::ostream& out, bool with_phase = false) const;
  std::size_t sweeps() const { return rows.empty() ? 0 : rows.back().sweep; }
};

/// Thrown when a solver exhausts its sweep budget; keeps what it had.
class SolverNonConvergence : public NonConvergence {
 public:
  SolverNonConvergence(const std::string& message, EigenSet partial, ConvergenceRecord history,
                       std::vector<double> residual_history)
      : NonConvergence(message, std::move(residual_history)),
        partial_(std::move(partial)),
        record_(std::move(history)) {}
  const EigenSet& partial() const { return partial_; }
  const ConvergenceRecord& record() const { return record_; }

 private:
  EigenSet partial_;
  ConvergenceRecord record_;
};

enum class InnerSolve { multigrid, direct };

struct McParams {
  std::size_t varpi = 1;             // correction sweeps per level
  MgParams mg;
  std::size_t fine_level_extra = 100;  // extra sweeps allowed on the fine level
  double tol = 1e-12;                // max relative eigenvalue change to stop
  std::size_t coarse_level = 0;      // 0: smallest level with more than nev + guard unknowns
  std::size_t guard = 0;             // extra pairs carried along, neither tested nor returned
  InnerSolve inner = InnerSolve::multigrid;
};

void validate(const McParams& params);

/// Stiffness and mass on every level: K^(k) = A^(k), M^(k) = R M^(k+1) Rᵀ.
class LevelPencils {
 public:
  LevelPencils(const GambletDecomposition& dec, const SparseOperator& mass);
  const SparseOperator& K(std::size_t k) const { return dec_->A(k); }
  const SparseOperator& M(std::size_t k) const { return mass_.at(k - 1); }
  std::size_t levels() const { return mass_.size(); }

 private:
  const GambletDecomposition* dec_;
  std::vector<SparseOperator> mass_;
};

/// Level used for the coarse eigenproblem under `params` (see McParams).
/// InvalidArgument naming nev when no level is large enough.
std::size_t choose_coarse_level(const GambletDecomposition& dec, std::size_t nev,
                                std::size_t requested);

/// Implements the coarse solve, the correction step, and the full
/// level-by-level scheme on top of one decomposition.
class MultilevelCorrector {
 public:
  /// Picks the coarse level for nev + guard pairs; InvalidArgument if none fits.
  MultilevelCorrector(const GambletDecomposition& dec, const LevelPencils& pencils,
                      McParams params, std::size_t nev);

  std::size_t coarse_level() const { return k0_; }
  const McParams& params() const { return params_; }
  const Multigrid& multigrid() const { return mg_; }

  std::size_t nev() const { return wanted_; }

  /// Lowest nev pairs of the pencil restricted to the coarse level.
  EigenSet coarse_solve() const;

  /// One block sweep at level `set.level`: per-pair linear solve with
  /// right-hand side λ M v, then a joint Rayleigh-Ritz on the coarse space
  /// plus the solved vectors.
  EigenSet correct(const EigenSet& set) const;

  /// Single-pair form: the Ritz pair closest to the input in |1/λ - 1/λ_in|.
  EigenSet correct_one(const EigenSet& pair) const;

  /// Level-k coefficients of the pairs in `set` lifted to `level`.
  EigenSet lift(const EigenSet& set, std::size_t level) const;

  /// Full scheme; SolverNonConvergence if the fine level does not settle.
  /// Sets hold nev + guard pairs internally; history and result only nev.
  EigenSet run(ConvergenceRecord& record) const;

  /// Recomputes residuals against the pencil of the set's level.
  void refresh_residuals(EigenSet& set) const;

 private:
  Vector inner_solve(std::size_t k, std::span<const double> z0, std::span<const double> g) const;
  const std::vector<Vector>& coarse_basis(std::size_t k) const { return basis_.at(k - 1); }
  EigenSet ritz(std::size_t k, const std::vector<Vector>& extra) const;
  void ensure_factor(std::size_t k) const;

  const GambletDecomposition* dec_;
  const LevelPencils* pencils_;
  McParams params_;
  Multigrid mg_;
  std::size_t nev_ = 0;     // working block size, nev + guard
  std::size_t wanted_ = 0;
  std::size_t k0_ = 1;
  std::vector<std::vector<Vector>> basis_;  // coarse unit vectors lifted to each level >= k0
  mutable std::map<std::size_t, std::unique_ptr<ProfileCholesky>> factors_;
};

EigenSet coarse_eigensolve(const GambletDecomposition& dec, const LevelPencils& pencils,
                           std::size_t nev, std::size_t coarse_level = 0);

EigenSet one_correction(std::size_t k, const EigenSet& pair_in, const GambletDecomposition& dec,
                        const LevelPencils& pencils, const McParams& params);

struct McResult {
  EigenSet set;
  ConvergenceRecord record;
};

McResult multilevel_correction(const GambletDecomposition& dec, const LevelPencils& pencils,
                               std::size_t nev, const McParams& params);

/// |(wᵀKw/wᵀMw - λ) - ((w-v)ᵀK(w-v) - λ (w-v)ᵀM(w-v)) / wᵀMw| for an exact
/// eigenpair K v = λ M v (any scaling of v). InvalidArgument if w = 0.
double rayleigh_quotient_expansion_check(const SparseOperator& k, const SparseOperator& m,
                                         double lambda, std::span<const double> v,
                                         std::span<const double> w);

/// Rayleigh-Ritz of (K, M) on the span of `basis`: M-orthonormalized with
/// reorthogonalization, directions whose norm falls below 1e-12 of the
/// original dropped. Returns all Ritz values ascending with energy-normalized
/// vectors (M-normalized when energy_normalize is false). DegenerateBasis if
/// nothing survives.
EigenSet rayleigh_ritz(const SparseOperator& k, const SparseOperator& m,
                       const std::vector<Vector>& basis, bool energy_normalize = true);

/// Residual norms ||K v - λ M v|| / ||K v||.
std::vector<double> relative_residuals(const SparseOperator& k, const SparseOperator& m,
                                       const std::vector<double>& lambdas,
                                       const std::vector<Vector>& vectors);

}  // namespace geig
