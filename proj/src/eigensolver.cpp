#include "geig/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "geig/parallel.hpp"

namespace geig {

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double rel_change(double now, double before) {
  return std::abs(now - before) / std::max(std::abs(now), std::numeric_limits<double>::min());
}

}  // namespace

void ConvergenceRecord::write_csv(std::ostream& out, bool with_phase) const {
  std::string s = "sweep,level,pair,lambda,rel_change,residual";
  s += with_phase ? ",phase\n" : "\n";
  for (const auto& r : rows) {
    s += std::to_string(r.sweep) + "," + std::to_string(r.level) + "," + std::to_string(r.pair) +
         "," + num(r.lambda) + "," + num(r.rel_change) + "," + num(r.residual);
    if (with_phase) s += "," + r.phase;
    s += "\n";
  }
  out << s;
}

void validate(const McParams& params) {
  if (params.varpi < 1) throw InvalidArgument("mc.varpi must be at least 1");
  if (!(params.tol > 0.0)) throw InvalidArgument("mc.tol must be positive");
  validate(params.mg);
}

LevelPencils::LevelPencils(const GambletDecomposition& dec, const SparseOperator& mass)
    : dec_(&dec) {
  const std::size_t q = dec.levels();
  if (mass.rows() != dec.A(q).rows() || mass.cols() != dec.A(q).cols())
    throw InvalidArgument("mass matrix does not match the fine operator");
  mass_.resize(q);
  mass_[q - 1] = mass;
  for (std::size_t k = q; k >= 2; --k) mass_[k - 2] = galerkin_triple(dec.R(k), mass_[k - 1]);
}

std::size_t choose_coarse_level(const GambletDecomposition& dec, std::size_t nev,
                                std::size_t requested) {
  const std::size_t q = dec.levels();
  if (nev < 1) throw InvalidArgument("nev must be at least 1");
  if (requested > q)
    throw InvalidArgument("mc.coarse_level=" + std::to_string(requested) + " exceeds levels=" +
                          std::to_string(q));
  if (requested >= 1) {
    if (nev > dec.A(requested).rows())
      throw InvalidArgument("nev=" + std::to_string(nev) + " exceeds the dimension " +
                            std::to_string(dec.A(requested).rows()) + " of coarse level " +
                            std::to_string(requested));
    return requested;
  }
  for (std::size_t k = 1; k <= q; ++k)
    if (dec.A(k).rows() > nev) return k;
  if (dec.A(q).rows() >= nev) return q;
  throw InvalidArgument("nev=" + std::to_string(nev) + " exceeds the number of unknowns " +
                        std::to_string(dec.A(q).rows()));
}

std::vector<double> relative_residuals(const SparseOperator& k, const SparseOperator& m,
                                       const std::vector<double>& lambdas,
                                       const std::vector<Vector>& vectors) {
  std::vector<double> res(lambdas.size());
  Vector kv(k.rows()), mv(m.rows());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    k.multiply(vectors[i], kv);
    m.multiply(vectors[i], mv);
    const double kn = norm2(kv);
    for (std::size_t r = 0; r < kv.size(); ++r) kv[r] -= lambdas[i] * mv[r];
    res[i] = kn > 0.0 ? norm2(kv) / kn : norm2(kv);
  }
  return res;
}

EigenSet rayleigh_ritz(const SparseOperator& k, const SparseOperator& m,
                       const std::vector<Vector>& basis, bool energy_normalize) {
  const std::size_t n = m.rows();
  std::vector<Vector> q, mq;
  Vector mx(n);
  for (const auto& b : basis) {
    if (b.size() != n) throw InvalidArgument("rayleigh_ritz: basis vector has the wrong size");
    Vector x = b;
    m.multiply(x, mx);
    const double n0 = std::sqrt(std::max(0.0, dot(x, mx)));
    if (n0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < q.size(); ++j) axpy(-dot(mq[j], x), q[j], x);
    m.multiply(x, mx);
    const double nx = std::sqrt(std::max(0.0, dot(x, mx)));
    if (nx <= 1e-12 * n0) continue;
    for (auto& v : x) v /= nx;
    for (auto& v : mx) v /= nx;
    q.push_back(std::move(x));
    mq.push_back(mx);
  }
  if (q.empty()) throw DegenerateBasis("rayleigh_ritz: every basis direction was dropped");
  const std::size_t p = q.size();
  DenseSymMatrix kp(p), mp(p);
  Vector kx(n);
  for (std::size_t i = 0; i < p; ++i) {
    k.multiply(q[i], kx);
    for (std::size_t j = i; j < p; ++j) {
      kp.set(i, j, dot(kx, q[j]));
      mp.set(i, j, dot(mq[i], q[j]));
    }
  }
  const GeneralizedEigen ge = dense_sym_geig(kp, mp);
  EigenSet out;
  out.lambdas = ge.values;
  out.vectors.resize(p);
  for (std::size_t c = 0; c < p; ++c) {
    Vector v(n, 0.0);
    const DenseMatrix& y = energy_normalize ? ge.energy_vectors : ge.vectors;
    for (std::size_t j = 0; j < p; ++j) axpy(y(j, c), q[j], v);
    // Re-normalize against the sparse operator to remove projection round-off.
    (energy_normalize ? k : m).multiply(v, kx);
    const double e = dot(v, kx);
    if (e > 0.0)
      for (auto& x : v) x /= std::sqrt(e);
    out.vectors[c] = std::move(v);
  }
  out.residuals = relative_residuals(k, m, out.lambdas, out.vectors);
  return out;
}

MultilevelCorrector::MultilevelCorrector(const GambletDecomposition& dec,
                                         const LevelPencils& pencils, McParams params,
                                         std::size_t nev)
    : dec_(&dec),
      pencils_(&pencils),
      params_(params),
      mg_(dec, params.mg),
      nev_(nev + params.guard),
      wanted_(nev) {
  validate(params_);
  if (nev == 0) throw InvalidArgument("nev must be at least 1");
  if (pencils.levels() != dec.levels())
    throw InvalidArgument("pencils and decomposition have different level counts");
  k0_ = choose_coarse_level(dec, nev_, params_.coarse_level);
  basis_.resize(dec.levels());
  const std::size_t d0 = dec.A(k0_).rows();
  auto& b0 = basis_[k0_ - 1];
  for (std::size_t i = 0; i < d0; ++i) {
    Vector e(d0, 0.0);
    e[i] = 1.0;
    b0.push_back(std::move(e));
  }
  for (std::size_t k = k0_ + 1; k <= dec.levels(); ++k)
    for (const auto& v : basis_[k - 2]) basis_[k - 1].push_back(dec.prolong(k, v));
}

void MultilevelCorrector::refresh_residuals(EigenSet& set) const {
  set.residuals = relative_residuals(pencils_->K(set.level), pencils_->M(set.level), set.lambdas,
                                     set.vectors);
}

EigenSet MultilevelCorrector::coarse_solve() const {
  const GeneralizedEigen ge = dense_sym_geig(DenseSymMatrix::from_sparse(pencils_->K(k0_)),
                                             DenseSymMatrix::from_sparse(pencils_->M(k0_)));
  EigenSet set;
  set.level = k0_;
  for (std::size_t i = 0; i < nev_; ++i) {
    set.lambdas.push_back(ge.values[i]);
    set.vectors.push_back(ge.energy_vectors.column(i));
  }
  refresh_residuals(set);
  return set;
}

EigenSet MultilevelCorrector::lift(const EigenSet& set, std::size_t level) const {
  EigenSet out = set;
  out.level = level;
  for (auto& v : out.vectors) v = dec_->prolong_to(set.level, level, v);
  refresh_residuals(out);
  return out;
}

void MultilevelCorrector::ensure_factor(std::size_t k) const {
  if (params_.inner == InnerSolve::direct && !factors_.count(k))
    factors_[k] = std::make_unique<ProfileCholesky>(pencils_->K(k));
}

Vector MultilevelCorrector::inner_solve(std::size_t k, std::span<const double> z0,
                                        std::span<const double> g) const {
  if (params_.inner == InnerSolve::direct) return factors_.at(k)->solve(g);
  return mg_.cycle(k, z0, g);
}

EigenSet MultilevelCorrector::ritz(std::size_t k, const std::vector<Vector>& extra) const {
  std::vector<Vector> basis = coarse_basis(k);
  basis.insert(basis.end(), extra.begin(), extra.end());
  EigenSet r = rayleigh_ritz(pencils_->K(k), pencils_->M(k), basis);
  r.level = k;
  return r;
}

namespace {

std::vector<Vector> solve_all(const std::vector<Vector>& v, const std::vector<double>& lambdas,
                              const SparseOperator& m,
                              const std::function<Vector(std::span<const double>,
                                                         std::span<const double>)>& solve) {
  std::vector<Vector> out(v.size());
  parallel_for(v.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Vector rhs = m.apply(v[i]);
      for (auto& x : rhs) x *= lambdas[i];
      out[i] = solve(v[i], rhs);
    }
  });
  return out;
}

double m_overlap(const SparseOperator& m, const Vector& a, const Vector& b) {
  return std::abs(inner(m, a, b));
}

}  // namespace

EigenSet MultilevelCorrector::correct(const EigenSet& set) const {
  const std::size_t k = set.level;
  if (k < k0_ || k > dec_->levels()) throw InvalidArgument("correct: level outside the scheme");
  ensure_factor(k);
  const auto solved = solve_all(set.vectors, set.lambdas, pencils_->M(k),
                                [&](std::span<const double> z0, std::span<const double> g) {
                                  return inner_solve(k, z0, g);
                                });
  EigenSet all = ritz(k, solved);
  const std::size_t nev = set.nev();
  if (all.nev() < nev) throw DegenerateBasis("correct: trial space smaller than nev");
  EigenSet out;
  out.level = k;
  out.lambdas.assign(all.lambdas.begin(), all.lambdas.begin() + static_cast<long>(nev));
  out.vectors.assign(all.vectors.begin(), all.vectors.begin() + static_cast<long>(nev));
  out.residuals.assign(all.residuals.begin(), all.residuals.begin() + static_cast<long>(nev));
  // Inside clusters of nearly equal Ritz values, keep each pair index on the
  // vector it overlaps most.
  const SparseOperator& m = pencils_->M(k);
  std::size_t start = 0;
  while (start < nev) {
    std::size_t end = start + 1;
    while (end < nev && out.lambdas[end] - out.lambdas[end - 1] < 1e-8 * out.lambdas[end]) ++end;
    if (end - start > 1) {
      std::vector<std::size_t> free(end - start);
      std::iota(free.begin(), free.end(), start);
      std::vector<std::size_t> assign(end - start);
      for (std::size_t old = start; old < end; ++old) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < free.size(); ++c)
          if (m_overlap(m, set.vectors[old], out.vectors[free[c]]) >
              m_overlap(m, set.vectors[old], out.vectors[free[best]]))
            best = c;
        assign[old - start] = free[best];
        free.erase(free.begin() + static_cast<long>(best));
      }
      EigenSet copy = out;
      for (std::size_t old = start; old < end; ++old) {
        out.lambdas[old] = copy.lambdas[assign[old - start]];
        out.vectors[old] = copy.vectors[assign[old - start]];
        out.residuals[old] = copy.residuals[assign[old - start]];
      }
    }
    start = end;
  }
  return out;
}

EigenSet MultilevelCorrector::correct_one(const EigenSet& pair) const {
  if (pair.nev() != 1) throw InvalidArgument("correct_one: expects a single pair");
  const std::size_t k = pair.level;
  ensure_factor(k);
  const double lam = pair.lambdas[0];
  Vector rhs = pencils_->M(k).apply(pair.vectors[0]);
  for (auto& x : rhs) x *= lam;
  const Vector solved = inner_solve(k, pair.vectors[0], rhs);
  const EigenSet all = ritz(k, {solved});
  const SparseOperator& m = pencils_->M(k);
  std::size_t best = 0;
  for (std::size_t c = 1; c < all.nev(); ++c) {
    const double dc = std::abs(1.0 / all.lambdas[c] - 1.0 / lam);
    const double db = std::abs(1.0 / all.lambdas[best] - 1.0 / lam);
    const bool tie = std::abs(all.lambdas[c] - all.lambdas[best]) < 1e-8 * all.lambdas[best];
    if (tie ? m_overlap(m, pair.vectors[0], all.vectors[c]) >
                  m_overlap(m, pair.vectors[0], all.vectors[best])
            : dc < db)
      best = c;
  }
  EigenSet out;
  out.level = k;
  out.lambdas = {all.lambdas[best]};
  out.vectors = {all.vectors[best]};
  out.residuals = {all.residuals[best]};
  return out;
}

EigenSet MultilevelCorrector::run(ConvergenceRecord& record) const {
  const std::size_t q = dec_->levels();
  const std::size_t nev = wanted_;
  std::size_t sweep = 0;
  auto log = [&](const EigenSet& now, const EigenSet* before) {
    for (std::size_t i = 0; i < nev; ++i)
      record.rows.push_back({sweep, now.level, i + 1, now.lambdas[i],
                             before ? rel_change(now.lambdas[i], before->lambdas[i])
                                    : std::numeric_limits<double>::quiet_NaN(),
                             now.residuals[i], "mc"});
  };
  auto trimmed = [&](EigenSet s) {
    s.lambdas.resize(nev);
    s.vectors.resize(nev);
    s.residuals.resize(nev);
    return s;
  };
  EigenSet set = coarse_solve();
  log(set, nullptr);
  if (k0_ == q) return trimmed(std::move(set));

  double change = std::numeric_limits<double>::infinity();
  auto step = [&] {
    EigenSet next = correct(set);
    ++sweep;
    log(next, &set);
    change = 0.0;
    for (std::size_t i = 0; i < nev; ++i)
      change = std::max(change, rel_change(next.lambdas[i], set.lambdas[i]));
    set = std::move(next);
  };
  for (std::size_t k = k0_ + 1; k <= q; ++k) {
    set = lift(set, k);
    for (std::size_t l = 0; l < params_.varpi; ++l) step();
  }
  for (std::size_t extra = 0; change > params_.tol && extra < params_.fine_level_extra; ++extra)
    step();
  if (change > params_.tol) {
    std::vector<double> worst;
    for (std::size_t r = 0; r < record.rows.size(); r += nev) {
      double w = 0.0;
      for (std::size_t i = 0; i < nev && r + i < record.rows.size(); ++i)
        w = std::max(w, record.rows[r + i].residual);
      worst.push_back(w);
    }
    throw SolverNonConvergence("multilevel correction: relative eigenvalue change " +
                                   num(change) + " still above tol after " +
                                   std::to_string(sweep) + " sweeps",
                               trimmed(std::move(set)), record, worst);
  }
  return trimmed(std::move(set));
}

EigenSet coarse_eigensolve(const GambletDecomposition& dec, const LevelPencils& pencils,
                           std::size_t nev, std::size_t coarse_level) {
  McParams p;
  p.coarse_level = coarse_level;
  const MultilevelCorrector mc(dec, pencils, p, nev);
  return mc.lift(mc.coarse_solve(), dec.levels());
}

EigenSet one_correction(std::size_t k, const EigenSet& pair_in, const GambletDecomposition& dec,
                        const LevelPencils& pencils, const McParams& params) {
  if (pair_in.level != k) throw InvalidArgument("one_correction: pair is not on level k");
  const MultilevelCorrector mc(dec, pencils, params, 1);
  return mc.correct_one(pair_in);
}

McResult multilevel_correction(const GambletDecomposition& dec, const LevelPencils& pencils,
                               std::size_t nev, const McParams& params) {
  const MultilevelCorrector mc(dec, pencils, params, nev);
  McResult r;
  r.set = mc.run(r.record);
  return r;
}

double rayleigh_quotient_expansion_check(const SparseOperator& k, const SparseOperator& m,
                                         double lambda, std::span<const double> v,
                                         std::span<const double> w) {
  if (norm2(w) == 0.0) throw InvalidArgument("rayleigh quotient expansion: w must be nonzero");
  Vector d(w.begin(), w.end());
  axpy(-1.0, v, d);
  const double wmw = inner(m, w, w);
  const double lhs = inner(k, w, w) / wmw - lambda;
  const double rhs = inner(k, d, d) / wmw - lambda * inner(m, d, d) / wmw;
  return std::abs(lhs - rhs);
}

}  // namespace geig
