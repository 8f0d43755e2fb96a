#include "geig/hierarchy.hpp"

#include <cmath>
#include <string>

#include "geig/errors.hpp"

namespace geig {

namespace {

std::size_t side(std::size_t k) { return std::size_t{1} << k; }

SparseOperator haar_nesting(std::size_t k) {
  const std::size_t nc = side(k), nf = side(k + 1);
  std::vector<Triplet> t;
  t.reserve(4 * nc * nc);
  for (std::size_t cy = 0; cy < nc; ++cy)
    for (std::size_t cx = 0; cx < nc; ++cx)
      for (std::size_t dy = 0; dy < 2; ++dy)
        for (std::size_t dx = 0; dx < 2; ++dx)
          t.push_back({cx + cy * nc, (2 * cx + dx) + (2 * cy + dy) * nf, 0.5});
  return SparseOperator::from_triplets(nc * nc, nf * nf, std::move(t));
}

}  // namespace

Hierarchy build_hierarchy(std::size_t q, const Grid& grid) {
  if (q < 1 || q > 20) throw InvalidArgument("levels must be between 1 and 20");
  if (grid.cells_per_side % side(q) != 0)
    throw InvalidArgument("grid_n=" + std::to_string(grid.cells_per_side) +
                          " is not divisible by 2^levels=" + std::to_string(side(q)));
  Hierarchy h;
  h.q = q;
  h.grid_cells = grid.cells_per_side;
  for (std::size_t k = 1; k < q; ++k) h.pi.push_back(haar_nesting(k));
  h.fine_aggregation = node_aggregation(grid, q);
  return h;
}

SparseOperator node_aggregation(const Grid& grid, std::size_t level) {
  const std::size_t n = grid.cells_per_side;
  const std::size_t nc = side(level);
  if (n % nc != 0) throw InvalidArgument("grid is not divisible by the level cell count");
  const std::size_t s = n / nc;
  const std::size_t m = grid.nodes_per_side();
  std::vector<std::size_t> owner(grid.interior_nodes());
  std::vector<std::size_t> count(nc * nc, 0);
  for (std::size_t b = 1; b <= m; ++b)
    for (std::size_t a = 1; a <= m; ++a) {
      const std::size_t cell = (a - 1) / s + ((b - 1) / s) * nc;
      owner[(a - 1) + (b - 1) * m] = cell;
      ++count[cell];
    }
  std::vector<Triplet> t;
  t.reserve(owner.size());
  for (std::size_t node = 0; node < owner.size(); ++node)
    t.push_back({owner[node], node, 1.0 / std::sqrt(static_cast<double>(count[owner[node]]))});
  return SparseOperator::from_triplets(nc * nc, owner.size(), std::move(t));
}

SparseOperator build_W(const SparseOperator& pi) {
  std::vector<char> covered(pi.cols(), 0);
  std::vector<Triplet> t;
  std::size_t row = 0;
  for (std::size_t p = 0; p < pi.rows(); ++p) {
    auto c = pi.row_cols(p);
    auto v = pi.row_values(p);
    const std::size_t s = c.size();
    for (std::size_t r = 0; r < s; ++r) {
      if (std::abs(v[r] - v[0]) > 1e-12 * std::abs(v[0]) || v[0] == 0.0)
        throw InvalidArgument("build_W: row " + std::to_string(p) +
                              " of the nesting matrix does not have equal weights");
      if (covered[c[r]])
        throw InvalidArgument("build_W: column " + std::to_string(c[r]) +
                              " belongs to more than one parent");
      covered[c[r]] = 1;
    }
    if (s == 4) {
      static constexpr double kSigns[3][4] = {{1, 1, -1, -1}, {1, -1, 1, -1}, {1, -1, -1, 1}};
      for (const auto& signs : kSigns) {
        for (std::size_t r = 0; r < 4; ++r) t.push_back({row, c[r], 0.5 * signs[r]});
        ++row;
      }
    } else {
      for (std::size_t r = 1; r < s; ++r) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(r * (r + 1)));
        for (std::size_t l = 0; l < r; ++l) t.push_back({row, c[l], scale});
        t.push_back({row, c[r], -static_cast<double>(r) * scale});
        ++row;
      }
    }
  }
  for (std::size_t j = 0; j < pi.cols(); ++j)
    if (!covered[j])
      throw InvalidArgument("build_W: column " + std::to_string(j) + " has no parent");
  return SparseOperator::from_triplets(row, pi.cols(), std::move(t));
}

SparseOperator aggregate(const std::vector<SparseOperator>& nesting, std::size_t k,
                         std::size_t top_dim) {
  const std::size_t q = nesting.size() + 1;
  if (k < 1 || k > q)
    throw InvalidArgument("aggregate: level " + std::to_string(k) + " outside 1.." +
                          std::to_string(q));
  const std::size_t dim = nesting.empty() ? top_dim : nesting.back().cols();
  SparseOperator out = SparseOperator::identity(dim);
  for (std::size_t j = q - 1; j >= k; --j) out = multiply(nesting[j - 1], out);
  return out;
}

MeasurementChain::MeasurementChain(const Hierarchy& hier, const Grid& grid)
    : q_(hier.q), grid_(grid) {
  if (grid.cells_per_side != hier.grid_cells)
    throw InvalidArgument("hierarchy was built for a different grid");
  for (std::size_t k = 1; k < q_; ++k) dims_.push_back(hier.cells(k));
  dims_.push_back(grid.interior_nodes());
  for (std::size_t k = 1; k + 1 < q_; ++k) nesting_.push_back(hier.nesting(k));
  if (q_ >= 2) nesting_.push_back(node_aggregation(grid, q_ - 1));
  for (std::size_t k = 2; k <= q_; ++k) {
    const SparseOperator& pi = nesting(k - 1);
    complement_.push_back(build_W(pi));
    const SparseOperator& w = complement_.back();
    std::vector<std::size_t> col_parent(pi.cols());
    for (std::size_t p = 0; p < pi.rows(); ++p)
      for (auto c : pi.row_cols(p)) col_parent[c] = p;
    std::vector<std::size_t> parent(w.rows());
    for (std::size_t j = 0; j < w.rows(); ++j) parent[j] = col_parent[w.row_cols(j)[0]];
    parent_.push_back(std::move(parent));
  }
  measurement_.resize(q_);
  measurement_[q_ - 1] = SparseOperator::identity(dims_.back());
  for (std::size_t k = q_ - 1; k >= 1; --k)
    measurement_[k - 1] = multiply(nesting(k), measurement_[k]);
}

std::array<long, 2> MeasurementChain::cell(std::size_t k, std::size_t i) const {
  if (k < 1 || k >= q_) throw InvalidArgument("cell coordinates exist only below the fine level");
  const std::size_t s = side(k);
  return {static_cast<long>(i % s), static_cast<long>(i / s)};
}

double MeasurementChain::width(std::size_t k) const {
  return k >= q_ ? grid_.h() : 2.0 / static_cast<double>(side(k));
}

std::array<double, 2> MeasurementChain::center(std::size_t k, std::size_t i) const {
  if (k == q_) {
    const std::size_t m = grid_.nodes_per_side();
    const double h = grid_.h();
    return {-1.0 + h * static_cast<double>(i % m + 1), -1.0 + h * static_cast<double>(i / m + 1)};
  }
  const auto c = cell(k, i);
  const double w = width(k);
  return {-1.0 + w * (static_cast<double>(c[0]) + 0.5), -1.0 + w * (static_cast<double>(c[1]) + 0.5)};
}

}  // namespace geig
