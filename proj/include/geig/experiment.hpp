#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geig/discretization.hpp"
#include "geig/eigensolver.hpp"
#include "geig/gamblet.hpp"
#include "geig/hierarchy.hpp"
#include "geig/lobpcg.hpp"

namespace geig {

inline constexpr const char* kVersion = "0.1.0";

enum class ProblemKind { constant, checkerboard, coefficient_file, anderson };
enum class SolverKind { mc, lobpcg, hybrid };
enum class PreconditionerKind { gamblet, jacobi, identity };

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::constant;
  std::uint64_t seed = 1;
  double eps = 0.0;  // block size in physical length; 0 means one grid cell
  double lo = 0.05, hi = 20.0;
  double alpha = 1.0, beta = 1e4;
  std::string path, potential_path;

  std::size_t grid_n = 0;
  std::size_t levels = 0;
  std::size_t nev = 0;
  SolverKind solver = SolverKind::mc;
  Interpolation baseline = Interpolation::gamblet;

  McParams mc;  // mc.mg is the multigrid block
  LobpcgParams lobpcg;
  PreconditionerKind preconditioner = PreconditionerKind::gamblet;
  std::uint64_t lobpcg_seed = 1;
  double hybrid_mc_tol = 1e-6;

  TransformOptions transform;

  bool report_condition = true;
  bool report_contraction = true;
  std::size_t contraction_cycles = 8;
  std::uint64_t contraction_seed = 1;

  std::string output_dir = "out";

  /// Fully resolved form, accepted back by parse_config.
  nlohmann::json to_json() const;
};

struct ConfigResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;  // one line per violation
};

/// Accepts a config object or a manifest ({"config": {...}, ...}).
ConfigResult parse_config(const nlohmann::json& j);
/// Reads and parses a file; read and syntax errors land in `errors`.
ConfigResult validate_config(const std::string& path);

struct Problem {
  Grid grid{2};
  CoefficientField field;
  ProblemMatrices matrices;
  Hierarchy hierarchy;
  MeasurementChain chain;
};

Problem build_problem(const ExperimentConfig& cfg);

/// Runs the configured solver and writes history.csv, summary.json and
/// manifest.json into cfg.output_dir. Returns 0 on convergence, 2 when the
/// solver gave up (files still written); throws on config or IO errors.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Builds the decomposition and writes it to <output_dir>/decomposition.
void transform_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Condition numbers of every B^(k) of a saved decomposition, plus decay
/// profiles when the directory records its grid. Same numbers as summary.json.
nlohmann::json diagnose_decomposition(const std::string& dir);

/// Per-level cond(B^(k)), keyed by level.
nlohmann::json condition_report(const GambletDecomposition& dec);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace geig
