#include <doctest.h>

#include <filesystem>

#include "geig/direct.hpp"
#include "geig/errors.hpp"
#include "geig/gamblet.hpp"
#include "support.hpp"

using namespace geig;
using testing::dense;

namespace {

GambletDecomposition exact(const testing::Setup& s, bool track = false) {
  TransformOptions o;
  o.track_vectors = track;
  return transform(s.mats.stiffness, s.chain, o);
}

}  // namespace

TEST_SUITE("gamblet_transform") {

TEST_CASE("q = 1 keeps the fine operator") {
  const auto s = testing::make_setup(4, 1);
  const auto d = exact(s);
  CHECK(d.levels() == 1);
  CHECK(relative_difference(d.A(1), s.mats.stiffness) == 0.0);
}

TEST_CASE("oracle examples") {
  const Vector diag{1, 2, 3, 4};
  const auto a = SparseOperator::diagonal(diag);
  auto [theta, ak] = oracle_level_matrices(a, SparseOperator::identity(4));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(theta(i, i) == doctest::Approx(1.0 / diag[i]));
    CHECK(ak(i, i) == doctest::Approx(diag[i]));
  }
  auto [t1, a1] = oracle_level_matrices(a, SparseOperator::from_triplets(1, 4, {{0, 0, 1.0}}));
  CHECK(t1(0, 0) == doctest::Approx(1.0));
  CHECK(a1(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(oracle_level_matrices(SparseOperator::diagonal(Vector{1, 0}), SparseOperator::identity(2)),
                  NotPositiveDefinite);
}

TEST_CASE("exact transform equals the dense oracle on every level") {
  for (std::size_t n : {8, 16})
    for (std::size_t q : {2, 3}) {
      for (bool rough : {false, true}) {
        const auto field = rough ? testing::checker(n, 7, 0.05, 20.0) : CoefficientField::constant(Grid(n));
        const auto s = testing::make_setup(n, q, &field);
        const auto d = exact(s);
        for (std::size_t k = 1; k < q; ++k) {
          auto [theta, ak] = oracle_level_matrices(s.mats.stiffness, s.chain.measurement(k));
          const Eigen::MatrixXd want = dense(SparseOperator::from_dense(ak.size(), ak.size(), ak.data()));
          CHECK(testing::rel_frob(dense(d.A(k)), want) <= 1e-9);
        }
        for (std::size_t k = 2; k <= q; ++k) {
          const Eigen::MatrixXd w = dense(d.W(k));
          const Eigen::MatrixXd b = w * dense(d.A(k)) * w.transpose();
          CHECK(testing::rel_frob(dense(d.B(k)), b) <= 1e-12);
          // R = π (I - A Wᵀ B⁻¹ W)
          const Eigen::MatrixXd pi = dense(s.chain.nesting(k - 1));
          const Eigen::MatrixXd ak = dense(d.A(k));
          const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(ak.rows(), ak.rows());
          const Eigen::MatrixXd r = pi * (eye - ak * w.transpose() * b.ldlt().solve(w));
          CHECK((dense(d.R(k)) - r).norm() <= 1e-10 * r.norm());
          // SPD and finite condition
          CHECK(Eigen::LLT<Eigen::MatrixXd>(b).info() == Eigen::Success);
          CHECK(std::isfinite(condition_number(d.B(k))));
        }
      }
    }
}

TEST_CASE("coarse operator equals the two-step Galerkin product") {
  const auto field = testing::checker(16, 7, 0.05, 20.0);
  const auto s = testing::make_setup(16, 3, &field);
  const auto d = exact(s);
  for (std::size_t k = 2; k <= 3; ++k) {
    const Eigen::MatrixXd r = dense(d.R(k));
    const Eigen::MatrixXd two_step = r * (dense(d.A(k)) * r.transpose());
    CHECK(testing::rel_frob(dense(d.A(k - 1)), two_step) <= 1e-13);
    CHECK(relative_difference(galerkin_triple(d.R(k), d.A(k)), d.A(k - 1)) <= 1e-13);
  }
}

TEST_CASE("level operators stay symmetric positive definite") {
  const auto field = testing::contrast(16, 2, 1e4);
  const auto s = testing::make_setup(16, 4, &field);
  for (auto mode : {TransformMode::exact, TransformMode::localized}) {
    TransformOptions o;
    o.mode = mode;
    o.radius = 1;
    const auto d = transform(s.mats.stiffness, s.chain, o);
    for (std::size_t k = 1; k <= 4; ++k) {
      CHECK(d.A(k).is_symmetric());
      CHECK(Eigen::LLT<Eigen::MatrixXd>(dense(d.A(k))).info() == Eigen::Success);
    }
  }
}

TEST_CASE("transform input errors") {
  const auto s = testing::make_setup(8, 2);
  TransformOptions o;
  o.mode = TransformMode::localized;
  o.radius = 0;
  CHECK_THROWS_AS(transform(s.mats.stiffness, s.chain, o), InvalidArgument);
  CHECK_THROWS_AS(transform(SparseOperator::identity(5), s.chain), InvalidArgument);
  auto bad = s.mats.stiffness.scaled(-1.0);
  CHECK_THROWS_AS(transform(bad, s.chain), NotPositiveDefinite);
}

TEST_CASE("wavelet vectors") {
  const auto field = testing::checker(16, 7, 0.05, 20.0);
  const auto s = testing::make_setup(16, 3, &field);
  const auto d = exact(s, true);
  auto [psi3, chi3] = wavelet_vectors(d, 3);
  CHECK(relative_difference(psi3, SparseOperator::identity(225)) == 0.0);

  // bi-orthogonality against the measurements
  for (std::size_t k = 1; k <= 3; ++k) {
    auto [psi, chi] = wavelet_vectors(d, k);
    const Eigen::MatrixXd m = dense(s.chain.measurement(k)) * dense(psi).transpose();
    CHECK((m - Eigen::MatrixXd::Identity(m.rows(), m.cols())).norm() <= 1e-8 * std::sqrt(double(m.rows())));
  }
  // χ on different levels are energy-orthogonal
  const Eigen::MatrixXd a = dense(s.mats.stiffness);
  std::vector<Eigen::MatrixXd> chi(4);
  for (std::size_t k = 1; k <= 3; ++k) chi[k] = dense(wavelet_vectors(d, k).second);
  for (std::size_t k = 1; k <= 3; ++k)
    for (std::size_t l = k + 1; l <= 3; ++l) {
      const double scale = std::sqrt((chi[k] * a * chi[k].transpose()).norm() *
                                     (chi[l] * a * chi[l].transpose()).norm());
      CHECK((chi[k] * a * chi[l].transpose()).norm() <= 1e-8 * scale);
    }
  // stiffness of the wavelets is B, of the pre-wavelets is A
  CHECK(testing::rel_frob(chi[2] * a * chi[2].transpose(), dense(d.B(2))) <= 1e-10);
  const Eigen::MatrixXd p1 = dense(wavelet_vectors(d, 1).first);
  CHECK(testing::rel_frob(p1 * a * p1.transpose(), dense(d.A(1))) <= 1e-10);

  const auto untracked = exact(s);
  CHECK_THROWS_AS(wavelet_vectors(untracked, 2), UnsupportedOperation);
}

TEST_CASE("telescoping reconstruction of the solution") {
  const auto field = testing::checker(16, 7, 0.05, 20.0);
  const auto s = testing::make_setup(16, 4, &field);
  const auto d = exact(s);
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector g = rng.vector(s.mats.stiffness.rows());
    const Vector u = direct_solve(s.mats.stiffness, g);
    const auto parts = gamblet_components(d, g);
    REQUIRE(parts.size() == 4);
    Vector sum(u.size(), 0.0);
    for (const auto& p : parts) axpy(1.0, p, sum);
    Vector e = sum;
    axpy(-1.0, u, e);
    CHECK(std::sqrt(inner(s.mats.stiffness, e, e)) <= 1e-9 * std::sqrt(inner(s.mats.stiffness, u, u)));
    // the pieces are mutually energy-orthogonal
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t l = k + 1; l < 4; ++l)
        CHECK(std::abs(inner(s.mats.stiffness, parts[k], parts[l])) <=
              1e-9 * inner(s.mats.stiffness, u, u));
  }
}

TEST_CASE("decay profile") {
  const auto s = testing::make_setup(32, 5);
  const auto d = exact(s, true);
  const auto prof = decay_profile(d, s.chain, 2, 10, 4);
  REQUIRE(prof.size() == 5);
  auto [psi, chi] = wavelet_vectors(d, 2);
  const Vector row = [&] {
    Vector r(psi.cols(), 0.0);
    for (std::size_t p = 0; p < psi.row_cols(10).size(); ++p) r[psi.row_cols(10)[p]] = psi.row_values(10)[p];
    return r;
  }();
  CHECK(prof[0].second == doctest::Approx(inner(s.mats.stiffness, row, row)).epsilon(1e-12));
  for (std::size_t n = 1; n < prof.size(); ++n)
    if (prof[n - 1].second > 0.0) CHECK(prof[n].second < prof[n - 1].second);
  // without tracking the profile comes from prolongation and agrees
  const auto untracked = exact(s);
  const auto again = decay_profile(untracked, s.chain, 2, 10, 4);
  for (std::size_t n = 0; n < prof.size(); ++n)
    CHECK(again[n].second == doctest::Approx(prof[n].second).epsilon(1e-10));
  CHECK_THROWS_AS(decay_profile(d, s.chain, 2, 16, 4), InvalidArgument);
}

TEST_CASE("localized transform approaches the exact one as the radius grows") {
  const auto field = testing::checker(32, 7, 0.05, 20.0);
  const auto s = testing::make_setup(32, 5, &field);
  const auto ex = exact(s);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t r : {1, 2, 4, 8}) {
    TransformOptions o;
    o.mode = TransformMode::localized;
    o.radius = r;
    o.local_tol = 1e-10;
    o.droptol = 0.0;
    const auto loc = transform(s.mats.stiffness, s.chain, o);
    const double err = relative_difference(loc.A(1), ex.A(1));
    CHECK(err < previous);
    previous = err;
    CHECK(relative_difference(loc.B(5), ex.B(5)) <= 1e-14);
  }
  CHECK(previous <= 1e-8);
  // patches that cover the whole level reproduce the exact operators
  TransformOptions full;
  full.mode = TransformMode::localized;
  full.radius = 32;
  full.local_tol = 1e-13;
  full.droptol = 0.0;
  const auto all = transform(s.mats.stiffness, s.chain, full);
  for (std::size_t k = 1; k < 5; ++k) CHECK(relative_difference(all.A(k), ex.A(k)) <= 1e-9);
}

TEST_CASE("geometric baseline uses the plain nesting") {
  const auto s = testing::make_setup(16, 3);
  TransformOptions o;
  o.interpolation = Interpolation::geometric;
  const auto d = transform(s.mats.stiffness, s.chain, o);
  for (std::size_t k = 2; k <= 3; ++k) {
    CHECK(relative_difference(d.R(k), s.chain.nesting(k - 1)) == 0.0);
    CHECK(relative_difference(d.A(k - 1), galerkin_triple(s.chain.nesting(k - 1), d.A(k))) <= 1e-15);
  }
}

TEST_CASE("condition numbers against a dense oracle") {
  Rng rng(22);
  for (std::size_t n : {30, 500}) {
    // tridiagonal SPD with a known spread plus a random diagonal perturbation
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
      t.push_back({i, i, 2.5 + 0.2 * rng.uniform()});
      if (i + 1 < n) {
        t.push_back({i, i + 1, -1.0});
        t.push_back({i + 1, i, -1.0});
      }
    }
    const auto a = SparseOperator::from_triplets(n, n, t, true);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(a));
    const double want = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    CHECK(condition_number(a) == doctest::Approx(want).epsilon(1e-6));
  }
  const auto s = testing::make_setup(16, 3);
  const auto d = exact(s);
  for (std::size_t k = 2; k <= 3; ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(d.B(k)));
    CHECK(condition_number(d.B(k)) ==
          doctest::Approx(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff()).epsilon(1e-8));
  }
}

TEST_CASE("save and load round trip") {
  const auto field = testing::checker(16, 7, 0.05, 20.0);
  const auto s = testing::make_setup(16, 3, &field);
  TransformOptions o;
  o.mode = TransformMode::localized;
  o.radius = 2;
  const auto d = transform(s.mats.stiffness, s.chain, o);
  const auto dir = (std::filesystem::temp_directory_path() / "geig_dec_roundtrip").string();
  std::filesystem::remove_all(dir);
  save_decomposition(dir, d);
  const auto back = load_decomposition(dir);
  REQUIRE(back.levels() == 3);
  CHECK(back.options().mode == TransformMode::localized);
  CHECK(back.options().radius == 2);
  for (std::size_t k = 1; k <= 3; ++k) CHECK(relative_difference(back.A(k), d.A(k)) == 0.0);
  for (std::size_t k = 2; k <= 3; ++k) {
    CHECK(relative_difference(back.B(k), d.B(k)) == 0.0);
    CHECK(relative_difference(back.R(k), d.R(k)) == 0.0);
    CHECK(relative_difference(back.W(k), d.W(k)) == 0.0);
    CHECK(condition_number(back.B(k)) == condition_number(d.B(k)));
  }
  CHECK_THROWS(load_decomposition("/nonexistent/geig_dec"));
}

}  // TEST_SUITE
