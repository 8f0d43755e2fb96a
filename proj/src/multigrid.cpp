#include "geig/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geig/errors.hpp"
#include "geig/rng.hpp"

namespace geig {

void validate(const MgParams& params) {
  if (params.p != 1 && params.p != 2) throw InvalidArgument("mg.p must be 1 or 2");
  if (!(params.lambda_bound_factor >= 1.0))
    throw InvalidArgument("mg.lambda_bound_factor must be at least 1");
}

double estimate_lambda_bound(const SparseOperator& a, double factor) {
  double bound = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.row_values(i)) s += std::abs(v);
    bound = std::max(bound, s);
  }
  return bound * factor;
}

Multigrid::Multigrid(const GambletDecomposition& dec, MgParams params)
    : dec_(&dec), params_(params) {
  validate(params_);
  if (dec.levels() == 0) throw InvalidArgument("multigrid: empty decomposition");
  for (std::size_t k = 1; k <= dec.levels(); ++k)
    lambda_.push_back(estimate_lambda_bound(dec.A(k), params_.lambda_bound_factor));
  coarse_ = ProfileCholesky(dec.A(1));
}

void Multigrid::smooth(std::size_t k, std::span<const double> g, std::span<double> z,
                       std::size_t steps, const MgParams& prm, bool descending) const {
  const SparseOperator& a = dec_->A(k);
  const std::size_t n = a.rows();
  if (prm.smoother == Smoother::richardson) {
    const double step = 1.0 / lambda_[k - 1];
    Vector az(n);
    for (std::size_t s = 0; s < steps; ++s) {
      a.multiply(z, az);
      for (std::size_t i = 0; i < n; ++i) z[i] += step * (g[i] - az[i]);
    }
    return;
  }
  auto relax = [&](std::size_t i) {
    auto c = a.row_cols(i);
    auto v = a.row_values(i);
    double r = g[i], diag = 0.0;
    for (std::size_t p = 0; p < c.size(); ++p) {
      if (c[p] == i) diag = v[p];
      r -= v[p] * z[c[p]];
    }
    z[i] += r / diag;
  };
  for (std::size_t s = 0; s < steps; ++s) {
    if (descending)
      for (std::size_t i = n; i-- > 0;) relax(i);
    else
      for (std::size_t i = 0; i < n; ++i) relax(i);
  }
}

Vector Multigrid::run(std::size_t k, std::span<const double> z0, std::span<const double> g,
                      const MgParams& prm, bool symmetric) const {
  if (k == 1) {
    Vector x(g.begin(), g.end());
    coarse_.solve_in_place(x);
    return x;
  }
  const SparseOperator& a = dec_->A(k);
  const std::size_t n = a.rows();
  Vector z(z0.begin(), z0.end());
  Vector residual(n);
  if (prm.residual_at == ResidualPoint::initial) {
    a.multiply(z, residual);
    for (std::size_t i = 0; i < n; ++i) residual[i] = g[i] - residual[i];
  }
  smooth(k, g, z, prm.m1, prm, false);
  if (prm.residual_at == ResidualPoint::presmoothed) {
    a.multiply(z, residual);
    for (std::size_t i = 0; i < n; ++i) residual[i] = g[i] - residual[i];
  }
  const Vector gc = dec_->restrict_to_coarse(k, residual);
  Vector y(gc.size(), 0.0);
  for (std::size_t i = 0; i < prm.p; ++i) y = run(k - 1, y, gc, prm, symmetric);
  axpy(1.0, dec_->prolong(k, y), z);
  smooth(k, g, z, prm.m2, prm, symmetric);
  return z;
}

Vector Multigrid::cycle(std::size_t k, std::span<const double> z0,
                        std::span<const double> g) const {
  if (k < 1 || k > dec_->levels())
    throw InvalidArgument("mg: level " + std::to_string(k) + " outside 1.." +
                          std::to_string(dec_->levels()));
  const std::size_t n = dec_->A(k).rows();
  if (z0.size() != n || g.size() != n)
    throw InvalidArgument("mg: vectors must have " + std::to_string(n) + " entries at level " +
                          std::to_string(k));
  return run(k, z0, g, params_, false);
}

std::pair<Vector, std::size_t> Multigrid::solve(std::size_t k, std::span<const double> g,
                                                double tol, std::size_t max_cycles) const {
  const SparseOperator& a = dec_->A(k == 0 ? 1 : std::min(k, dec_->levels()));
  Vector z(g.size(), 0.0);
  const double gnorm = norm2(g);
  std::vector<double> history;
  Vector az(g.size());
  if (gnorm == 0.0) return {z, 0};
  for (std::size_t c = 1; c <= max_cycles; ++c) {
    z = cycle(k, z, g);
    a.multiply(z, az);
    double r = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) r += (g[i] - az[i]) * (g[i] - az[i]);
    history.push_back(std::sqrt(r) / gnorm);
    if (history.back() <= tol) return {z, c};
  }
  throw NonConvergence("mg_solve: no convergence in " + std::to_string(max_cycles) + " cycles",
                       history);
}

Vector Multigrid::precondition(std::span<const double> r) const {
  const std::size_t q = dec_->levels();
  if (r.size() != dec_->A(q).rows()) throw InvalidArgument("precondition: dimension mismatch");
  if (params_.m1 != params_.m2 || params_.m1 == 0)
    throw InvalidArgument("precondition: needs m1 == m2 >= 1 for a symmetric operator");
  MgParams prm = params_;
  prm.residual_at = ResidualPoint::presmoothed;
  const Vector zero(r.size(), 0.0);
  return run(q, zero, r, prm, true);
}

Vector mg(std::size_t k, std::span<const double> z0, std::span<const double> g,
          const GambletDecomposition& dec, const MgParams& params) {
  return Multigrid(dec, params).cycle(k, z0, g);
}

double measure_contraction(const Multigrid& mg, std::size_t k, std::size_t cycles,
                           std::uint64_t seed) {
  const SparseOperator& a = mg.decomposition().A(k);
  Rng rng(seed);
  Vector z = rng.vector(a.rows());
  const Vector zero(a.rows(), 0.0);
  double err = std::sqrt(inner(a, z, z));
  const double start = err;
  double theta = 0.0;
  for (std::size_t c = 0; c < cycles; ++c) {
    z = mg.cycle(k, z, zero);
    const double next = std::sqrt(inner(a, z, z));
    theta = std::max(theta, next / err);
    err = next;
    if (err < 1e-12 * start) break;
  }
  return theta;
}

}  // namespace geig
