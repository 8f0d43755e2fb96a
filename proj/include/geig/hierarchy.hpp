#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "geig/discretization.hpp"
#include "geig/sparse.hpp"

namespace geig {

/// Dyadic cells of [-1,1]^2. Level k has 2^k x 2^k cells, flat index
/// cx + cy 2^k. Children of (cx, cy) are (2cx + dx, 2cy + dy).
struct Hierarchy {
  std::size_t q = 0;
  std::size_t grid_cells = 0;             // cells per side of the FEM grid
  std::vector<SparseOperator> pi;         // pi[k-1] = nesting from level k to k+1, k = 1..q-1
  SparseOperator fine_aggregation;        // level-q cells -> interior nodes

  std::size_t cells(std::size_t k) const { return std::size_t{1} << (2 * k); }
  const SparseOperator& nesting(std::size_t k) const { return pi.at(k - 1); }
};

/// Requires grid cells per side divisible by 2^q.
Hierarchy build_hierarchy(std::size_t q, const Grid& grid);

/// Level-k cells to interior nodes. A node belongs to the cell containing its
/// lower-left incident grid cell; each row has equal weights and unit norm,
/// rows of cells that own no node are zero.
SparseOperator node_aggregation(const Grid& grid, std::size_t level);

/// Orthonormal basis of the kernel of a cellular, equal-weight nesting
/// matrix, one block of rows per parent in parent order. Four-child blocks
/// use the fixed Haar rows (1,1,-1,-1)/2, (1,-1,1,-1)/2, (1,-1,-1,1)/2 over
/// the children in column order; other block sizes use Helmert rows.
SparseOperator build_W(const SparseOperator& pi);

/// Product nesting[k-1] nesting[k] ... nesting[q-2], i.e. level k expressed
/// on level q where q = nesting.size() + 1. k = q gives the identity of size
/// top_dim (taken from the last factor when the chain is nonempty).
SparseOperator aggregate(const std::vector<SparseOperator>& nesting, std::size_t k,
                         std::size_t top_dim = 0);

/// Level structure used by the transform: levels 1..q-1 are Haar cells,
/// level q is the fine node space (unit vectors), and the top nesting is
/// node_aggregation at level q-1.
class MeasurementChain {
 public:
  MeasurementChain() = default;
  MeasurementChain(const Hierarchy& hier, const Grid& grid);

  std::size_t levels() const { return q_; }
  std::size_t dim(std::size_t k) const { return dims_.at(k - 1); }
  /// Nesting from level k to k+1, k = 1..q-1.
  const SparseOperator& nesting(std::size_t k) const { return nesting_.at(k - 1); }
  /// Kernel basis W^(k), k = 2..q.
  const SparseOperator& complement(std::size_t k) const { return complement_.at(k - 2); }
  /// Level-(k-1) index owning row j of W^(k).
  std::size_t complement_parent(std::size_t k, std::size_t j) const {
    return parent_.at(k - 2).at(j);
  }
  /// Level k on the fine nodes (identity at k = q).
  const SparseOperator& measurement(std::size_t k) const { return measurement_.at(k - 1); }
  /// Integer cell coordinates of index i at a Haar level k < q.
  std::array<long, 2> cell(std::size_t k, std::size_t i) const;
  /// Physical location of index i: cell center for k < q, node position at k = q.
  std::array<double, 2> center(std::size_t k, std::size_t i) const;
  /// Physical width of a level-k cell (the grid spacing at k = q).
  double width(std::size_t k) const;
  const Grid& grid() const { return grid_; }

 private:
  std::size_t q_ = 0;
  Grid grid_{2};
  std::vector<std::size_t> dims_;
  std::vector<SparseOperator> nesting_;
  std::vector<SparseOperator> complement_;
  std::vector<std::vector<std::size_t>> parent_;
  std::vector<SparseOperator> measurement_;
};

}  // namespace geig
