#include <doctest.h>

#include "geig/direct.hpp"
#include "geig/errors.hpp"
#include "geig/multigrid.hpp"
#include "support.hpp"

using namespace geig;
using testing::dense;

namespace {

struct Fixture {
  testing::Setup s;
  GambletDecomposition d;
  Fixture(std::size_t n, std::size_t q, const CoefficientField* f = nullptr)
      : s(testing::make_setup(n, q, f)), d(transform(s.mats.stiffness, s.chain)) {}
};

double energy_error(const SparseOperator& a, const Vector& z, const Vector& exact) {
  Vector e = z;
  axpy(-1.0, exact, e);
  return std::sqrt(inner(a, e, e));
}

}  // namespace

TEST_SUITE("multigrid") {

TEST_CASE("lambda bound examples") {
  CHECK(estimate_lambda_bound(SparseOperator::diagonal(Vector{1, 2, 3})) == 3.0);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 5; ++i) {
    t.push_back({i, i, 2.0});
    if (i + 1 < 5) {
      t.push_back({i, i + 1, -1.0});
      t.push_back({i + 1, i, -1.0});
    }
  }
  const auto lap = SparseOperator::from_triplets(5, 5, t, true);
  const double bound = estimate_lambda_bound(lap);
  CHECK(bound == 4.0);
  CHECK(bound >= 2.0 * (1.0 - std::cos(5.0 * M_PI / 6.0)));
  CHECK(estimate_lambda_bound(lap, 1.5) == 6.0);

  Rng rng(31);
  const auto a = testing::sparse(testing::random_spd(12, rng), true);
  const double b = estimate_lambda_bound(a);
  for (int i = 0; i < 20; ++i) {
    const Vector x = rng.vector(12);
    CHECK(norm2(a.apply(x)) / norm2(x) <= b);
  }
}

TEST_CASE("parameter validation") {
  MgParams p;
  p.p = 3;
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  p = MgParams{};
  p.lambda_bound_factor = 0.5;
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  CHECK_NOTHROW(validate(MgParams{}));
}

TEST_CASE("level one is a direct solve and zero is a fixed point") {
  const Fixture f(16, 3);
  const Multigrid m(f.d, MgParams{});
  Rng rng(32);
  const Vector g = rng.vector(f.d.A(1).rows());
  const Vector z = m.cycle(1, Vector(g.size(), 0.0), g);
  Vector r = f.d.A(1).apply(z);
  axpy(-1.0, g, r);
  CHECK(norm2(r) <= 1e-12 * norm2(g));

  const std::size_t n = f.d.A(3).rows();
  const Vector zero = m.cycle(3, Vector(n, 0.0), Vector(n, 0.0));
  CHECK(norm2(zero) == 0.0);
  CHECK_THROWS_AS(m.cycle(4, zero, zero), InvalidArgument);
  CHECK_THROWS_AS(m.cycle(3, Vector(3, 0.0), zero), InvalidArgument);
}

TEST_CASE("one V-cycle contracts the energy error on 32 x 32") {
  const Fixture f(32, 5);
  const Multigrid m(f.d, MgParams{});
  const auto& a = f.d.A(5);
  Rng rng(33);
  const Vector g = rng.vector(a.rows());
  const Vector exact = direct_solve(a, g);
  Vector z(a.rows(), 0.0);
  for (int c = 0; c < 5; ++c) {
    const double before = energy_error(a, z, exact);
    z = m.cycle(5, z, g);
    // frozen regression bound for m1 = m2 = 2 Gauss-Seidel, residual at the incoming iterate
    CHECK(energy_error(a, z, exact) <= 0.45 * before);
  }
}

TEST_CASE("solve reaches the tolerance and matches a direct solve") {
  const Fixture f(32, 5);
  const auto& a = f.d.A(5);
  Rng rng(34);
  const Vector g = rng.vector(a.rows());
  const Multigrid v(f.d, MgParams{});
  auto [z, cycles] = v.solve(5, g, 1e-10, 100);
  CHECK(cycles <= 28);  // measured and frozen
  Vector r = a.apply(z);
  axpy(-1.0, g, r);
  CHECK(norm2(r) <= 1e-10 * norm2(g));
  const Vector exact = direct_solve(a, g);
  Vector e = z;
  axpy(-1.0, exact, e);
  CHECK(norm2(e) <= 1e-8 * norm2(exact));

  MgParams wp;
  wp.p = 2;
  const Multigrid w(f.d, wp);
  CHECK(w.solve(5, g, 1e-10, 100).second <= cycles);

  try {
    v.solve(5, g, 1e-14, 2);
    FAIL("expected non-convergence");
  } catch (const NonConvergence& e) {
    CHECK(e.residual_history().size() == 2);
  }
}

TEST_CASE("richardson smoother and the presmoothed residual variant converge") {
  const Fixture f(16, 4);
  const auto& a = f.d.A(4);
  Rng rng(35);
  const Vector g = rng.vector(a.rows());
  for (auto sm : {Smoother::richardson, Smoother::gauss_seidel})
    for (auto at : {ResidualPoint::initial, ResidualPoint::presmoothed}) {
      MgParams p;
      p.smoother = sm;
      p.residual_at = at;
      const Multigrid m(f.d, p);
      CHECK(measure_contraction(m, 4, 6, 1) < 1.0);
      CHECK_NOTHROW(m.solve(4, g, 1e-8, 200));
    }
}

TEST_CASE("without smoothing one cycle is the two-level correction") {
  const Fixture f(16, 3);
  MgParams p;
  p.m1 = 0;
  p.m2 = 0;
  const Multigrid m(f.d, p);
  const auto& a = f.d.A(2);
  Rng rng(36);
  const Vector z0 = rng.vector(a.rows()), g = rng.vector(a.rows());
  const Vector got = m.cycle(2, z0, g);
  // z0 + Rᵀ A1⁻¹ R (g - A z0)
  Vector r = g;
  axpy(-1.0, a.apply(z0), r);
  const Vector c = direct_solve(f.d.A(1), f.d.restrict_to_coarse(2, r));
  Vector want = z0;
  axpy(1.0, f.d.prolong(2, c), want);
  Vector diff = got;
  axpy(-1.0, want, diff);
  CHECK(norm2(diff) <= 1e-13 * norm2(want));
}

TEST_CASE("preconditioner is symmetric and positive") {
  const auto field = testing::contrast(16, 5, 1e4);
  const Fixture f(16, 4, &field);
  const Multigrid m(f.d, MgParams{});
  const std::size_t n = f.d.A(4).rows();
  CHECK(norm2(m.precondition(Vector(n, 0.0))) == 0.0);
  Rng rng(37);
  for (int i = 0; i < 20; ++i) {
    const Vector r1 = rng.vector(n), r2 = rng.vector(n);
    const double lhs = dot(m.precondition(r1), r2), rhs = dot(r1, m.precondition(r2));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(lhs), std::abs(rhs)));
    CHECK(dot(m.precondition(r1), r1) > 0.0);
  }
  MgParams lop;
  lop.m1 = 1;
  lop.m2 = 2;
  const Multigrid bad(f.d, lop);
  CHECK_THROWS_AS(bad.precondition(Vector(n, 1.0)), InvalidArgument);
}

TEST_CASE("contraction is uniform across levels") {
  const Fixture f(32, 5);
  const Multigrid m(f.d, MgParams{});
  double lo = 1.0, hi = 0.0;
  for (std::size_t k = 3; k <= 5; ++k) {
    const double theta = measure_contraction(m, k, 6, 2);
    CHECK(theta < 1.0);
    lo = std::min(lo, theta);
    hi = std::max(hi, theta);
  }
  CHECK(hi - lo <= 0.2);
}

}  // TEST_SUITE
