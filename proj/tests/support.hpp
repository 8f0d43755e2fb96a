#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "geig/discretization.hpp"
#include "geig/gamblet.hpp"
#include "geig/hierarchy.hpp"
#include "geig/rng.hpp"
#include "geig/sparse.hpp"

namespace testing {

inline Eigen::MatrixXd dense(const geig::SparseOperator& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<long>(a.rows()), static_cast<long>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p) m(static_cast<long>(i), static_cast<long>(c[p])) = v[p];
  }
  return m;
}

inline Eigen::VectorXd vec(const geig::Vector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

inline geig::Vector stdvec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline geig::SparseOperator sparse(const Eigen::MatrixXd& m, bool symmetric = false) {
  std::vector<double> d(static_cast<std::size_t>(m.size()));
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return geig::SparseOperator::from_dense(static_cast<std::size_t>(m.rows()),
                                          static_cast<std::size_t>(m.cols()), d, symmetric);
}

inline double rel_frob(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / b.norm();
}

// Random SPD matrix G Gᵀ + n I with entries of G in [-1, 1).
inline Eigen::MatrixXd random_spd(std::size_t n, geig::Rng& rng, double shift = -1.0) {
  Eigen::MatrixXd g(static_cast<long>(n), static_cast<long>(n));
  for (long i = 0; i < g.rows(); ++i)
    for (long j = 0; j < g.cols(); ++j) g(i, j) = rng.symmetric();
  Eigen::MatrixXd a = g * g.transpose();
  a += (shift < 0 ? static_cast<double>(n) : shift) * Eigen::MatrixXd::Identity(g.rows(), g.rows());
  return 0.5 * (a + a.transpose());
}

inline Eigen::MatrixXd random_matrix(std::size_t m, std::size_t n, geig::Rng& rng,
                                     double density = 1.0) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(m), static_cast<long>(n));
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      if (rng.uniform() < density) a(i, j) = rng.symmetric();
  return a;
}

// Sorted generalized eigenvalues of the dense pencil.
inline Eigen::VectorXd pencil_values(const Eigen::MatrixXd& k, const Eigen::MatrixXd& m) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, m);
  return es.eigenvalues();
}

// Lowest `count` eigenvalues of the bilinear FEM pencil for a = 1 on n cells,
// built from the 1-D stiffness and mass tridiagonals.
inline std::vector<double> closed_form(std::size_t n, std::size_t count) {
  const double h = 2.0 / static_cast<double>(n);
  std::vector<double> ratio;
  for (std::size_t p = 1; p < n; ++p) {
    const double c = std::cos(static_cast<double>(p) * M_PI / static_cast<double>(n));
    ratio.push_back(((2.0 - 2.0 * c) / h) / (h * (4.0 + 2.0 * c) / 6.0));
  }
  std::vector<double> all;
  for (double a : ratio)
    for (double b : ratio) all.push_back(a + b);
  std::sort(all.begin(), all.end());
  all.resize(std::min(count, all.size()));
  return all;
}

struct Setup {
  geig::Grid grid{2};
  geig::CoefficientField field;
  geig::ProblemMatrices mats;
  geig::Hierarchy hier;
  geig::MeasurementChain chain;
};

inline Setup make_setup(std::size_t n, std::size_t q, const geig::CoefficientField* field = nullptr) {
  Setup s;
  s.grid = geig::Grid(n);
  s.field = field ? *field : geig::CoefficientField::constant(s.grid);
  s.mats = geig::assemble(s.grid, s.field);
  s.hier = geig::build_hierarchy(q, s.grid);
  s.chain = geig::MeasurementChain(s.hier, s.grid);
  return s;
}

// Checkerboard with one-cell blocks and contrast hi/lo.
inline geig::CoefficientField checker(std::size_t n, std::uint64_t seed, double lo, double hi) {
  const geig::Grid g(n);
  return geig::gen_checkerboard(seed, g.h(), lo, hi, g);
}

inline geig::CoefficientField contrast(std::size_t n, std::uint64_t seed, double c) {
  return checker(n, seed, 1.0 / std::sqrt(c), std::sqrt(c));
}

}  // namespace testing
