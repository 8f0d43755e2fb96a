#include <doctest.h>

#include "geig/errors.hpp"
#include "geig/hierarchy.hpp"
#include "support.hpp"

using namespace geig;
using testing::dense;

TEST_SUITE("hierarchy") {

TEST_CASE("q = 1 has no nesting") {
  const auto h = build_hierarchy(1, Grid(4));
  CHECK(h.pi.empty());
  CHECK(h.fine_aggregation.rows() == 4);
}

TEST_CASE("q = 2 nesting is 4 x 16 with entries 1/2") {
  const auto h = build_hierarchy(2, Grid(8));
  const auto& pi = h.nesting(1);
  REQUIRE(pi.rows() == 4);
  REQUIRE(pi.cols() == 16);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(pi.row_cols(i).size() == 4);
    for (double v : pi.row_values(i)) CHECK(v == 0.5);
    // children of (cx, cy) sit at (2cx + dx, 2cy + dy)
    const std::size_t cx = i % 2, cy = i / 2;
    for (std::size_t c : pi.row_cols(i)) {
      CHECK(c % 4 / 2 == cx);
      CHECK(c / 4 / 2 == cy);
    }
  }
}

TEST_CASE("nesting rows are orthonormal on every level") {
  const auto h = build_hierarchy(4, Grid(16));
  for (std::size_t k = 1; k < 4; ++k) {
    const Eigen::MatrixXd p = dense(h.nesting(k));
    CHECK((p * p.transpose() - Eigen::MatrixXd::Identity(p.rows(), p.rows())).norm() <= 1e-14);
  }
  // interior nodes grouped into 16 x 16 cells of a 32 x 32 grid
  const Eigen::MatrixXd f = dense(build_hierarchy(4, Grid(32)).fine_aggregation);
  CHECK((f * f.transpose() - Eigen::MatrixXd::Identity(f.rows(), f.rows())).norm() <= 1e-14);
}

TEST_CASE("build_hierarchy rejects non-dyadic grids") {
  CHECK_THROWS_AS(build_hierarchy(3, Grid(12)), InvalidArgument);
  CHECK_THROWS_AS(build_hierarchy(0, Grid(8)), InvalidArgument);
}

TEST_CASE("complement blocks") {
  const auto h = build_hierarchy(2, Grid(8));
  const auto w = build_W(h.nesting(1));
  REQUIRE(w.rows() == 12);
  REQUIRE(w.cols() == 16);
  const Eigen::MatrixXd wd = dense(w), pd = dense(h.nesting(1));
  CHECK((wd * wd.transpose() - Eigen::MatrixXd::Identity(12, 12)).norm() <= 1e-15);
  CHECK((pd * wd.transpose()).norm() <= 1e-15);
  // fixed rows over the children of parent 0 in column order
  const auto cols = w.row_cols(0);
  REQUIRE(cols.size() == 4);
  const double want[3][4] = {{0.5, 0.5, -0.5, -0.5}, {0.5, -0.5, 0.5, -0.5}, {0.5, -0.5, -0.5, 0.5}};
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) CHECK(w.at(r, cols[c]) == want[r][c]);
  // each block annihilates (1,1,1,1)/2
  for (std::size_t r = 0; r < 12; ++r) {
    double s = 0.0;
    for (double v : w.row_values(r)) s += 0.5 * v;
    CHECK(s == 0.0);
  }
}

TEST_CASE("stacked [nesting; complement] is orthogonal and sizes match") {
  const Grid g(32);
  const auto h = build_hierarchy(5, g);
  for (std::size_t k = 2; k <= 4; ++k) {
    const auto w = build_W(h.nesting(k - 1));
    CHECK(w.rows() == 3 * (std::size_t{1} << (2 * (k - 1))));
    Eigen::MatrixXd s(static_cast<long>(h.cells(k)), static_cast<long>(h.cells(k)));
    s << dense(h.nesting(k - 1)), dense(w);
    CHECK((s * s.transpose() - Eigen::MatrixXd::Identity(s.rows(), s.rows())).norm() <= 1e-14);
  }
}

TEST_CASE("build_W rejects unequal weights and overlapping blocks") {
  const auto bad = SparseOperator::from_triplets(1, 4, {{0, 0, 0.5}, {0, 1, 0.5}, {0, 2, 0.5}, {0, 3, 0.6}});
  CHECK_THROWS_AS(build_W(bad), InvalidArgument);
  const auto overlap = SparseOperator::from_triplets(2, 3, {{0, 0, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  CHECK_THROWS_AS(build_W(overlap), InvalidArgument);
}

TEST_CASE("aggregate") {
  const auto h = build_hierarchy(3, Grid(8));
  CHECK(relative_difference(aggregate(h.pi, 3), SparseOperator::identity(64)) == 0.0);
  const auto h2 = build_hierarchy(2, Grid(8));
  CHECK(relative_difference(aggregate(h2.pi, 1), h2.nesting(1)) == 0.0);
  const Eigen::MatrixXd want = dense(h.nesting(1)) * dense(h.nesting(2));
  CHECK((dense(aggregate(h.pi, 1)) - want).norm() <= 1e-15);
  CHECK_THROWS_AS(aggregate(h.pi, 0), InvalidArgument);
  CHECK_THROWS_AS(aggregate(h.pi, 4), InvalidArgument);
}

TEST_CASE("measurement chain") {
  const auto s = testing::make_setup(16, 3);
  const auto& c = s.chain;
  CHECK(c.levels() == 3);
  CHECK(c.dim(1) == 4);
  CHECK(c.dim(2) == 16);
  CHECK(c.dim(3) == 225);
  // each interior node is owned by exactly one level-2 cell
  const Eigen::MatrixXd top = dense(c.nesting(2));
  for (long j = 0; j < top.cols(); ++j) CHECK((top.col(j).array() != 0.0).count() == 1);
  CHECK((top * top.transpose() - Eigen::MatrixXd::Identity(16, 16)).norm() <= 1e-14);
  for (std::size_t k = 2; k <= 3; ++k) {
    const Eigen::MatrixXd w = dense(c.complement(k)), p = dense(c.nesting(k - 1));
    CHECK(w.rows() == static_cast<long>(c.dim(k) - c.dim(k - 1)));
    CHECK((w * w.transpose() - Eigen::MatrixXd::Identity(w.rows(), w.rows())).norm() <= 1e-14);
    CHECK((p * w.transpose()).norm() <= 1e-14);
    // rows of W live inside the children of their parent
    for (std::size_t j = 0; j < c.complement(k).rows(); ++j) {
      const std::size_t parent = c.complement_parent(k, j);
      for (std::size_t col : c.complement(k).row_cols(j)) CHECK(p(static_cast<long>(parent), static_cast<long>(col)) != 0.0);
    }
  }
  // measurement(k) = product of nestings down to the nodes
  const Eigen::MatrixXd m1 = dense(c.measurement(1));
  CHECK((m1 - dense(c.nesting(1)) * top).norm() <= 1e-15);
  CHECK(c.width(1) == 1.0);
  CHECK(c.width(3) == 0.125);
  const auto ctr = c.center(1, 3);
  CHECK(ctr[0] == 0.5);
  CHECK(ctr[1] == 0.5);
}

}  // TEST_SUITE
