#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "geig/sparse.hpp"

namespace geig {

/// Uniform square grid on [-1,1]^2 with Dirichlet boundary. Unknowns are the
/// interior nodes, numbered x-fastest: node (a, b), 1 <= a, b <= n-1, has
/// index (a-1) + (b-1)(n-1).
struct Grid {
  std::size_t cells_per_side = 0;

  explicit Grid(std::size_t n);
  double h() const { return 2.0 / static_cast<double>(cells_per_side); }
  std::size_t nodes_per_side() const { return cells_per_side - 1; }
  std::size_t interior_nodes() const { return nodes_per_side() * nodes_per_side(); }
  std::size_t cells() const { return cells_per_side * cells_per_side; }
};

/// Per-cell values, row-major with the y index ascending. `potential` is
/// either empty (V = 0) or one value per cell.
struct CoefficientField {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> conductivity;
  std::vector<double> potential;

  static CoefficientField constant(const Grid& grid, double a = 1.0);
};

struct ProblemMatrices {
  SparseOperator stiffness;  // K
  SparseOperator mass;       // M
};

/// Bilinear finite elements with exact element integrals; boundary rows and
/// columns removed.
ProblemMatrices assemble(const Grid& grid, const CoefficientField& field);

/// Two-valued random field on eps x eps blocks (eps in physical length, must
/// cover a whole number of cells that divides the grid). Blocks are drawn in
/// row-major order, one fair coin per block, heads -> hi.
CoefficientField gen_checkerboard(std::uint64_t seed, double eps, double lo, double hi,
                                  const Grid& grid);

/// Same block structure, but the draws fill the potential with alpha or beta
/// and the conductivity is 1.
CoefficientField gen_anderson(std::uint64_t seed, double eps, double alpha, double beta,
                              const Grid& grid);

/// Block size in cells for a physical length eps; throws if eps is not a
/// whole number of cells dividing the grid.
std::size_t block_cells(double eps, const Grid& grid);

/// Text format: "nx ny" header then nx*ny positive values, row-major.
/// Throws LoadError naming the line of the first problem.
CoefficientField load_coefficient_file(const std::string& path);
/// Loads a potential file (same format; zeros allowed) into field.potential.
void load_potential_file(const std::string& path, CoefficientField& field);
void write_coefficient_file(const std::string& path, std::size_t nx, std::size_t ny,
                            const std::vector<double>& values);

}  // namespace geig
