#include "geig/discretization.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "geig/errors.hpp"
#include "geig/rng.hpp"

namespace geig {

Grid::Grid(std::size_t n) : cells_per_side(n) {
  if (n < 2) throw InvalidArgument("grid_n must be at least 2 (one interior node)");
}

CoefficientField CoefficientField::constant(const Grid& grid, double a) {
  CoefficientField f;
  f.nx = f.ny = grid.cells_per_side;
  f.conductivity.assign(grid.cells(), a);
  return f;
}

namespace {

// Local node order (0,0), (1,0), (1,1), (0,1). The stiffness block of a
// bilinear square element does not depend on h in 2-D.
constexpr double kStiff[4][4] = {{4, -1, -2, -1}, {-1, 4, -1, -2}, {-2, -1, 4, -1}, {-1, -2, -1, 4}};
constexpr double kMass[4][4] = {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}};

}  // namespace

ProblemMatrices assemble(const Grid& grid, const CoefficientField& field) {
  const std::size_t n = grid.cells_per_side;
  if (field.nx != n || field.ny != n || field.conductivity.size() != grid.cells())
    throw InvalidArgument("coefficient field is " + std::to_string(field.nx) + "x" +
                          std::to_string(field.ny) + " but the grid has " + std::to_string(n) +
                          "x" + std::to_string(n) + " cells");
  if (!field.potential.empty() && field.potential.size() != grid.cells())
    throw InvalidArgument("potential field size does not match the grid");
  for (double a : field.conductivity)
    if (!(a > 0.0)) throw InvalidArgument("conductivity values must be positive");
  for (double v : field.potential)
    if (!(v >= 0.0)) throw InvalidArgument("potential values must be nonnegative");

  const double h = grid.h();
  const double mass_scale = h * h / 36.0;
  const std::size_t m = grid.nodes_per_side();
  std::vector<Triplet> kt, mt;
  kt.reserve(16 * grid.cells());
  mt.reserve(16 * grid.cells());
  for (std::size_t cy = 0; cy < n; ++cy) {
    for (std::size_t cx = 0; cx < n; ++cx) {
      const std::size_t cell = cx + cy * n;
      const std::size_t ax[4] = {cx, cx + 1, cx + 1, cx};
      const std::size_t ay[4] = {cy, cy, cy + 1, cy + 1};
      long idx[4];
      for (int l = 0; l < 4; ++l) {
        const bool interior = ax[l] >= 1 && ax[l] <= m && ay[l] >= 1 && ay[l] <= m;
        idx[l] = interior ? static_cast<long>((ax[l] - 1) + (ay[l] - 1) * m) : -1;
      }
      const double a = field.conductivity[cell];
      const double v = field.potential.empty() ? 0.0 : field.potential[cell];
      for (int r = 0; r < 4; ++r) {
        if (idx[r] < 0) continue;
        for (int c = 0; c < 4; ++c) {
          if (idx[c] < 0) continue;
          const auto i = static_cast<std::size_t>(idx[r]);
          const auto j = static_cast<std::size_t>(idx[c]);
          const double me = mass_scale * kMass[r][c];
          kt.push_back({i, j, a * kStiff[r][c] / 6.0 + v * me});
          mt.push_back({i, j, me});
        }
      }
    }
  }
  const std::size_t nn = grid.interior_nodes();
  return {SparseOperator::from_triplets(nn, nn, std::move(kt), true),
          SparseOperator::from_triplets(nn, nn, std::move(mt), true)};
}

std::size_t block_cells(double eps, const Grid& grid) {
  const double cells = eps / grid.h();
  const double rounded = std::round(cells);
  if (!(eps > 0.0) || rounded < 1.0 || std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells) ||
      grid.cells_per_side % static_cast<std::size_t>(rounded) != 0)
    throw InvalidArgument("eps=" + std::to_string(eps) + " is not a whole number of cells (h=" +
                          std::to_string(grid.h()) + ") dividing the grid");
  return static_cast<std::size_t>(rounded);
}

namespace {

std::vector<double> two_valued_blocks(std::uint64_t seed, double eps, double lo, double hi,
                                      const Grid& grid) {
  const std::size_t b = block_cells(eps, grid);
  const std::size_t n = grid.cells_per_side;
  const std::size_t nb = n / b;
  Rng rng(seed);
  std::vector<double> values(grid.cells());
  for (std::size_t by = 0; by < nb; ++by)
    for (std::size_t bx = 0; bx < nb; ++bx) {
      const double v = rng.coin() ? hi : lo;
      for (std::size_t y = by * b; y < (by + 1) * b; ++y)
        for (std::size_t x = bx * b; x < (bx + 1) * b; ++x) values[x + y * n] = v;
    }
  return values;
}

}  // namespace

CoefficientField gen_checkerboard(std::uint64_t seed, double eps, double lo, double hi,
                                  const Grid& grid) {
  if (!(lo > 0.0) || !(hi > 0.0)) throw InvalidArgument("checkerboard values must be positive");
  CoefficientField f;
  f.nx = f.ny = grid.cells_per_side;
  f.conductivity = two_valued_blocks(seed, eps, lo, hi, grid);
  return f;
}

CoefficientField gen_anderson(std::uint64_t seed, double eps, double alpha, double beta,
                              const Grid& grid) {
  if (!(alpha >= 0.0) || !(beta >= 0.0))
    throw InvalidArgument("potential values must be nonnegative");
  CoefficientField f = CoefficientField::constant(grid);
  f.potential = two_valued_blocks(seed, eps, alpha, beta, grid);
  return f;
}

namespace {

struct ScalarFile {
  std::size_t nx = 0, ny = 0;
  std::vector<double> values;
};

ScalarFile read_scalar_file(const std::string& path, bool allow_zero) {
  std::ifstream in(path);
  if (!in) throw LoadError(path, 0, "cannot open file");
  ScalarFile f;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    if (!header) {
      std::string probe;
      if (!(ls >> probe)) continue;
      ls.clear();
      ls.str(line);
      long nx = 0, ny = 0;
      if (!(ls >> nx >> ny) || nx <= 0 || ny <= 0)
        throw LoadError(path, lineno, "expected header 'nx ny' with positive sizes");
      f.nx = static_cast<std::size_t>(nx);
      f.ny = static_cast<std::size_t>(ny);
      f.values.reserve(f.nx * f.ny);
      header = true;
      continue;
    }
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v))
        throw LoadError(path, lineno, "cannot parse '" + tok + "' as a number");
      if (allow_zero ? v < 0.0 : v <= 0.0)
        throw LoadError(path, lineno,
                        "value " + tok + (allow_zero ? " is negative" : " is not positive"));
      if (f.values.size() == f.nx * f.ny)
        throw LoadError(path, lineno, "more than " + std::to_string(f.nx * f.ny) + " values");
      f.values.push_back(v);
    }
  }
  if (!header) throw LoadError(path, lineno, "missing 'nx ny' header");
  if (f.values.size() != f.nx * f.ny)
    throw LoadError(path, lineno,
                    "expected " + std::to_string(f.nx * f.ny) + " values, found " +
                        std::to_string(f.values.size()));
  return f;
}

}  // namespace

CoefficientField load_coefficient_file(const std::string& path) {
  ScalarFile s = read_scalar_file(path, false);
  CoefficientField f;
  f.nx = s.nx;
  f.ny = s.ny;
  f.conductivity = std::move(s.values);
  return f;
}

void load_potential_file(const std::string& path, CoefficientField& field) {
  ScalarFile s = read_scalar_file(path, true);
  if (s.nx != field.nx || s.ny != field.ny)
    throw LoadError(path, 1, "potential is " + std::to_string(s.nx) + "x" + std::to_string(s.ny) +
                                 " but the conductivity field is " + std::to_string(field.nx) +
                                 "x" + std::to_string(field.ny));
  field.potential = std::move(s.values);
}

void write_coefficient_file(const std::string& path, std::size_t nx, std::size_t ny,
                            const std::vector<double>& values) {
  if (values.size() != nx * ny) throw InvalidArgument("value count does not match nx*ny");
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << nx << ' ' << ny << '\n' << std::setprecision(17);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) out << (x ? " " : "") << values[x + y * nx];
    out << '\n';
  }
}

}  // namespace geig
