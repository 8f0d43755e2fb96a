#include "geig/lobpcg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "geig/errors.hpp"
#include "geig/parallel.hpp"
#include "geig/rng.hpp"

namespace geig {

JacobiPreconditioner::JacobiPreconditioner(const SparseOperator& k) : inv_diag_(k.diagonal_entries()) {
  for (auto& d : inv_diag_) {
    if (!(d > 0.0)) throw NotPositiveDefinite("jacobi preconditioner: nonpositive diagonal");
    d = 1.0 / d;
  }
}

Vector JacobiPreconditioner::apply(std::span<const double> r) const {
  if (r.size() != inv_diag_.size()) throw InvalidArgument("jacobi preconditioner: size mismatch");
  Vector z(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] * inv_diag_[i];
  return z;
}

double rayleigh_quotient(std::span<const double> x, const SparseOperator& k,
                         const SparseOperator& m) {
  if (x.size() != k.cols() || x.size() != m.cols())
    throw InvalidArgument("rayleigh_quotient: dimension mismatch");
  const double xmx = inner(m, x, x);
  if (norm2(x) == 0.0 || !(xmx > 0.0)) throw InvalidArgument("rayleigh_quotient: zero vector");
  return inner(k, x, x) / xmx;
}

PinvitStep pinvit_step(std::span<const double> x, const SparseOperator& k, const SparseOperator& m,
                       const Preconditioner& b, std::uint64_t restart_seed) {
  PinvitStep out;
  out.mu = rayleigh_quotient(x, k, m);
  Vector r = k.apply(x);
  const Vector mx = m.apply(x);
  axpy(-out.mu, mx, r);
  const Vector w = b.apply(r);
  out.x.assign(x.begin(), x.end());
  axpy(-1.0, w, out.x);
  double nrm = std::sqrt(std::max(0.0, inner(m, out.x, out.x)));
  if (!(nrm > 1e-14 * std::sqrt(inner(m, x, x)))) {
    Rng rng(restart_seed);
    out.x = rng.vector(x.size());
    out.restarted = true;
    nrm = std::sqrt(inner(m, out.x, out.x));
  }
  for (auto& v : out.x) v /= nrm;
  return out;
}

namespace {

Vector residual(const SparseOperator& k, const SparseOperator& m, const Vector& x, double lam) {
  Vector r = k.apply(x);
  axpy(-lam, m.apply(x), r);
  return r;
}

EigenSet energy_scaled(EigenSet s) {
  for (std::size_t i = 0; i < s.nev(); ++i)
    if (s.lambdas[i] > 0.0)
      for (auto& v : s.vectors[i]) v /= std::sqrt(s.lambdas[i]);
  return s;
}

EigenSet leading(const EigenSet& all, std::size_t nev) {
  EigenSet s;
  s.level = all.level;
  s.lambdas.assign(all.lambdas.begin(), all.lambdas.begin() + static_cast<long>(nev));
  s.vectors.assign(all.vectors.begin(), all.vectors.begin() + static_cast<long>(nev));
  s.residuals.assign(all.residuals.begin(), all.residuals.begin() + static_cast<long>(nev));
  return s;
}

}  // namespace

LobpcgResult lobpcg(const SparseOperator& k, const SparseOperator& m, const Preconditioner& b,
                    const std::vector<Vector>& x0, const LobpcgParams& params) {
  const std::size_t nev = x0.size();
  if (nev == 0) throw InvalidArgument("lobpcg: empty initial block");
  if (!(params.tol > 0.0)) throw InvalidArgument("lobpcg.tol must be positive");
  EigenSet all = rayleigh_ritz(k, m, x0, false);
  if (all.nev() < nev) throw InvalidArgument("lobpcg: initial block has dependent columns");
  EigenSet x = leading(all, nev);
  x.level = params.level;

  LobpcgResult out;
  auto log = [&](std::size_t it, const EigenSet& now, const EigenSet* before) {
    for (std::size_t i = 0; i < nev; ++i)
      out.record.rows.push_back(
          {params.first_sweep + it, params.level, i + 1, now.lambdas[i],
           before ? std::abs(now.lambdas[i] - before->lambdas[i]) / std::abs(now.lambdas[i])
                  : std::numeric_limits<double>::quiet_NaN(),
           now.residuals[i], params.phase});
  };
  auto converged = [&](const EigenSet& s) {
    return std::all_of(s.residuals.begin(), s.residuals.end(),
                       [&](double r) { return r <= params.tol; });
  };
  log(0, x, nullptr);
  if (converged(x)) {
    out.set = energy_scaled(x);
    return out;
  }

  std::vector<Vector> p;  // previous directions, one per column (empty before the first step)
  for (std::size_t it = 1; it <= params.maxit; ++it) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < nev; ++i)
      if (x.residuals[i] > params.tol) active.push_back(i);
    std::vector<Vector> w(active.size());
    parallel_for(active.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t a = begin; a < end; ++a)
        w[a] = b.apply(residual(k, m, x.vectors[active[a]], x.lambdas[active[a]]));
    });
    std::vector<Vector> basis = x.vectors;
    basis.insert(basis.end(), w.begin(), w.end());
    if (!p.empty())
      for (auto i : active) basis.push_back(p[i]);
    all = rayleigh_ritz(k, m, basis, false);
    if (all.nev() < nev) throw DegenerateBasis("lobpcg: trial space collapsed below nev");
    EigenSet next = leading(all, nev);
    next.level = params.level;
    // New direction: the part of each new Ritz vector outside the old block.
    p.assign(nev, Vector());
    for (std::size_t i = 0; i < nev; ++i) {
      Vector d = next.vectors[i];
      const Vector md = m.apply(d);
      for (std::size_t j = 0; j < nev; ++j) axpy(-dot(md, x.vectors[j]), x.vectors[j], d);
      p[i] = std::move(d);
    }
    log(it, next, &x);
    x = std::move(next);
    out.iterations = it;
    if (converged(x)) {
      out.set = energy_scaled(x);
      return out;
    }
  }
  std::vector<double> worst;
  for (std::size_t r = 0; r < out.record.rows.size(); r += nev) {
    double v = 0.0;
    for (std::size_t i = 0; i < nev; ++i) v = std::max(v, out.record.rows[r + i].residual);
    worst.push_back(v);
  }
  throw SolverNonConvergence("lobpcg: residual above tol after " + std::to_string(params.maxit) +
                                 " iterations",
                             energy_scaled(x), out.record, worst);
}

LobpcgResult hybrid_solve(const GambletDecomposition& dec, const LevelPencils& pencils,
                          std::size_t nev, const McParams& mc_params,
                          const LobpcgParams& lobpcg_params) {
  const std::size_t q = dec.levels();
  const MultilevelCorrector mc(dec, pencils, mc_params, nev);
  ConvergenceRecord record;
  EigenSet start;
  try {
    start = mc.run(record);
  } catch (const SolverNonConvergence& e) {
    start = e.partial();
    record = e.record();
  }
  if (start.level != q) start = mc.lift(start, q);

  LobpcgParams lp = lobpcg_params;
  lp.level = q;
  lp.first_sweep = record.sweeps() + 1;
  lp.phase = "lobpcg";
  const GambletPreconditioner pre(mc.multigrid());
  try {
    LobpcgResult r = lobpcg(pencils.K(q), pencils.M(q), pre, start.vectors, lp);
    record.rows.insert(record.rows.end(), r.record.rows.begin(), r.record.rows.end());
    r.record = std::move(record);
    return r;
  } catch (const SolverNonConvergence& e) {
    record.rows.insert(record.rows.end(), e.record().rows.begin(), e.record().rows.end());
    throw SolverNonConvergence(e.what(), e.partial(), record, e.residual_history());
  }
}

}  // namespace geig
