#include "geig/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "geig/errors.hpp"
#include "geig/multigrid.hpp"
#include "geig/rng.hpp"

namespace geig {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Collects every problem instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
    for (const auto& [key, value] : obj.items())
      if (!allowed.count(key)) fail(prefix(where) + key, "unknown key");
  }

  template <typename T>
  T number(const json& obj, const std::string& where, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    const std::string name = prefix(where) + key;
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
        fail(name, "must be a nonnegative integer");
        return fallback;
      }
      return static_cast<T>(v.get<unsigned long long>());
    } else {
      if (!v.is_number()) {
        fail(name, "must be a number");
        return fallback;
      }
      return v.get<T>();
    }
  }

  std::string text(const json& obj, const std::string& where, const std::string& key,
                   const std::string& fallback, std::set<std::string> choices = {}) {
    if (!obj.contains(key)) return fallback;
    const std::string name = prefix(where) + key;
    if (!obj.at(key).is_string()) {
      fail(name, "must be a string");
      return fallback;
    }
    std::string v = obj.at(key).get<std::string>();
    if (!choices.empty() && !choices.count(v)) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : "|") + c;
      fail(name, "must be one of " + list + " (got '" + v + "')");
      return fallback;
    }
    return v;
  }

  bool flag(const json& obj, const std::string& where, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) {
      fail(prefix(where) + key, "must be true or false");
      return fallback;
    }
    return obj.at(key).get<bool>();
  }

  const json& block(const json& obj, const std::string& key) {
    static const json empty = json::object();
    if (!obj.contains(key)) return empty;
    if (!obj.at(key).is_object()) {
      fail(key, "must be an object");
      return empty;
    }
    return obj.at(key);
  }

  void fail(const std::string& field, const std::string& message) {
    errors_.push_back(field + ": " + message);
  }

 private:
  static std::string prefix(const std::string& where) { return where.empty() ? "" : where + "."; }
  std::vector<std::string>& errors_;
};

const char* name_of(ProblemKind k) {
  switch (k) {
    case ProblemKind::constant: return "constant";
    case ProblemKind::checkerboard: return "checkerboard";
    case ProblemKind::coefficient_file: return "coefficient_file";
    case ProblemKind::anderson: return "anderson";
  }
  return "";
}

const char* name_of(SolverKind k) {
  switch (k) {
    case SolverKind::mc: return "mc";
    case SolverKind::lobpcg: return "lobpcg";
    case SolverKind::hybrid: return "hybrid";
  }
  return "";
}

const char* name_of(PreconditionerKind k) {
  switch (k) {
    case PreconditionerKind::gamblet: return "gamblet";
    case PreconditionerKind::jacobi: return "jacobi";
    case PreconditionerKind::identity: return "identity";
  }
  return "";
}

// Dimension of level k of the measurement chain for an n-cell grid.
std::size_t level_dim(std::size_t n, std::size_t q, std::size_t k) {
  return k < q ? (std::size_t{1} << (2 * k)) : (n - 1) * (n - 1);
}

// Anderson blocks snap to the nearest power-of-two cell count dividing the grid.
double snap_eps(double eps, std::size_t n) {
  const double h = 2.0 / static_cast<double>(n);
  std::size_t best = 1;
  for (std::size_t c = 1; c <= n && n % c == 0; c *= 2)
    if (std::abs(std::log2(static_cast<double>(c) * h / eps)) <
        std::abs(std::log2(static_cast<double>(best) * h / eps)))
      best = c;
  return static_cast<double>(best) * h;
}

}  // namespace

json ExperimentConfig::to_json() const {
  json p;
  p["type"] = name_of(problem);
  switch (problem) {
    case ProblemKind::constant: break;
    case ProblemKind::checkerboard:
      p["seed"] = seed;
      p["eps"] = eps;
      p["lo"] = lo;
      p["hi"] = hi;
      break;
    case ProblemKind::coefficient_file:
      p["path"] = path;
      if (!potential_path.empty()) p["potential_path"] = potential_path;
      break;
    case ProblemKind::anderson:
      p["seed"] = seed;
      p["eps"] = eps;
      p["alpha"] = alpha;
      p["beta"] = beta;
      break;
  }
  json j;
  j["problem"] = p;
  j["grid_n"] = grid_n;
  j["levels"] = levels;
  j["nev"] = nev;
  j["solver"] = name_of(solver);
  j["baseline"] = baseline == Interpolation::gamblet ? "gamblet" : "geometric";
  j["mc"] = {{"varpi", mc.varpi},
             {"fine_level_extra", mc.fine_level_extra},
             {"tol", mc.tol},
             {"coarse_level", mc.coarse_level},
             {"guard", mc.guard},
             {"inner", mc.inner == InnerSolve::multigrid ? "multigrid" : "direct"}};
  j["mg"] = {{"m1", mc.mg.m1},
             {"m2", mc.mg.m2},
             {"p", mc.mg.p},
             {"smoother", mc.mg.smoother == Smoother::gauss_seidel ? "gauss_seidel" : "richardson"},
             {"lambda_bound_factor", mc.mg.lambda_bound_factor},
             {"residual_at",
              mc.mg.residual_at == ResidualPoint::initial ? "initial" : "presmoothed"}};
  j["lobpcg"] = {{"tol", lobpcg.tol},
                 {"maxit", lobpcg.maxit},
                 {"preconditioner", name_of(preconditioner)},
                 {"seed", lobpcg_seed}};
  j["hybrid"] = {{"mc_tol", hybrid_mc_tol}};
  j["transform"] = {{"mode", transform.mode == TransformMode::exact ? "exact" : "localized"},
                    {"radius", transform.radius},
                    {"droptol", transform.droptol},
                    {"local_tol", transform.local_tol},
                    {"track_vectors", transform.track_vectors}};
  j["diagnostics"] = {{"condition_numbers", report_condition},
                      {"contraction", report_contraction},
                      {"contraction_cycles", contraction_cycles},
                      {"contraction_seed", contraction_seed}};
  j["output_dir"] = output_dir;
  return j;
}

ConfigResult parse_config(const json& input) {
  ConfigResult result;
  auto& errors = result.errors;
  if (!input.is_object()) {
    errors.push_back("config: top level must be a JSON object");
    return result;
  }
  const json& j = input.contains("config") && input.at("config").is_object() ? input.at("config")
                                                                              : input;
  Reader rd(errors);
  rd.check_keys(j, "", {"problem", "grid_n", "levels", "nev", "solver", "baseline", "mc", "mg",
                        "lobpcg", "hybrid", "transform", "diagnostics", "output_dir"});
  ExperimentConfig c;

  for (const char* key : {"grid_n", "levels", "nev"})
    if (!j.contains(key)) errors.push_back(std::string(key) + ": required");
  c.grid_n = rd.number<std::size_t>(j, "", "grid_n", 0);
  c.levels = rd.number<std::size_t>(j, "", "levels", 0);
  c.nev = rd.number<std::size_t>(j, "", "nev", 0);
  if (j.contains("grid_n") && c.grid_n < 2) rd.fail("grid_n", "must be at least 2");
  if (j.contains("levels") && (c.levels < 1 || c.levels > 20))
    rd.fail("levels", "must be between 1 and 20");
  if (j.contains("nev") && c.nev < 1) rd.fail("nev", "must be at least 1");
  const bool sizes_ok = c.grid_n >= 2 && c.levels >= 1 && c.levels <= 20;
  if (sizes_ok && c.grid_n % (std::size_t{1} << c.levels) != 0)
    rd.fail("grid_n", "grid_n not divisible by 2^levels (grid_n=" + std::to_string(c.grid_n) +
                          ", 2^levels=" + std::to_string(std::size_t{1} << c.levels) + ")");

  // Problem.
  if (!j.contains("problem")) {
    errors.push_back("problem: required");
  } else if (j.at("problem").is_string()) {
    const std::string t = j.at("problem").get<std::string>();
    if (t == "constant") c.problem = ProblemKind::constant;
    else rd.fail("problem", "only 'constant' may be given as a bare string (got '" + t + "')");
  } else if (j.at("problem").is_object()) {
    const json& p = j.at("problem");
    const std::string t = rd.text(p, "problem", "type", "",
                                  {"constant", "checkerboard", "coefficient_file", "anderson"});
    if (t.empty() && !p.contains("type")) rd.fail("problem.type", "required");
    if (t == "constant") {
      c.problem = ProblemKind::constant;
      rd.check_keys(p, "problem", {"type"});
    } else if (t == "checkerboard") {
      c.problem = ProblemKind::checkerboard;
      rd.check_keys(p, "problem", {"type", "seed", "eps", "lo", "hi"});
      c.seed = rd.number<std::uint64_t>(p, "problem", "seed", 1);
      c.eps = rd.number<double>(p, "problem", "eps", 0.0);
      c.lo = rd.number<double>(p, "problem", "lo", 0.05);
      c.hi = rd.number<double>(p, "problem", "hi", 20.0);
      if (!(c.lo > 0.0)) rd.fail("problem.lo", "must be positive");
      if (!(c.hi > 0.0)) rd.fail("problem.hi", "must be positive");
    } else if (t == "coefficient_file") {
      c.problem = ProblemKind::coefficient_file;
      rd.check_keys(p, "problem", {"type", "path", "potential_path"});
      c.path = rd.text(p, "problem", "path", "");
      c.potential_path = rd.text(p, "problem", "potential_path", "");
      if (c.path.empty()) rd.fail("problem.path", "required");
    } else if (t == "anderson") {
      c.problem = ProblemKind::anderson;
      rd.check_keys(p, "problem", {"type", "seed", "eps", "alpha", "beta"});
      c.seed = rd.number<std::uint64_t>(p, "problem", "seed", 1);
      c.eps = rd.number<double>(p, "problem", "eps", 0.01);
      c.alpha = rd.number<double>(p, "problem", "alpha", 1.0);
      c.beta = rd.number<double>(p, "problem", "beta", 1e4);
      if (!(c.alpha >= 0.0)) rd.fail("problem.alpha", "must be nonnegative");
      if (!(c.beta >= 0.0)) rd.fail("problem.beta", "must be nonnegative");
    }
    if (c.eps < 0.0) rd.fail("problem.eps", "must be positive");
  } else {
    rd.fail("problem", "must be 'constant' or an object with a type");
  }
  if (sizes_ok) {
    const Grid grid(c.grid_n);
    if (c.problem == ProblemKind::checkerboard) {
      if (c.eps == 0.0) c.eps = grid.h();
      try {
        block_cells(c.eps, grid);
      } catch (const InvalidArgument& e) {
        rd.fail("problem.eps", e.what());
      }
    }
    if (c.problem == ProblemKind::anderson && c.eps > 0.0) c.eps = snap_eps(c.eps, c.grid_n);
  }

  c.solver = [&] {
    const std::string s = rd.text(j, "", "solver", "mc", {"mc", "lobpcg", "hybrid"});
    return s == "lobpcg" ? SolverKind::lobpcg : s == "hybrid" ? SolverKind::hybrid : SolverKind::mc;
  }();
  c.baseline = rd.text(j, "", "baseline", "gamblet", {"gamblet", "geometric"}) == "geometric"
                   ? Interpolation::geometric
                   : Interpolation::gamblet;

  const json& mg = rd.block(j, "mg");
  rd.check_keys(mg, "mg", {"m1", "m2", "p", "smoother", "lambda_bound_factor", "residual_at"});
  c.mc.mg.m1 = rd.number<std::size_t>(mg, "mg", "m1", 2);
  c.mc.mg.m2 = rd.number<std::size_t>(mg, "mg", "m2", 2);
  c.mc.mg.p = rd.number<std::size_t>(mg, "mg", "p", 1);
  if (c.mc.mg.p != 1 && c.mc.mg.p != 2) rd.fail("mg.p", "must be 1 (V-cycle) or 2 (W-cycle)");
  c.mc.mg.smoother = rd.text(mg, "mg", "smoother", "gauss_seidel", {"gauss_seidel", "richardson"}) ==
                             "richardson"
                         ? Smoother::richardson
                         : Smoother::gauss_seidel;
  c.mc.mg.lambda_bound_factor = rd.number<double>(mg, "mg", "lambda_bound_factor", 1.0);
  if (!(c.mc.mg.lambda_bound_factor >= 1.0)) rd.fail("mg.lambda_bound_factor", "must be at least 1");
  c.mc.mg.residual_at = rd.text(mg, "mg", "residual_at", "initial", {"initial", "presmoothed"}) ==
                                "presmoothed"
                            ? ResidualPoint::presmoothed
                            : ResidualPoint::initial;

  const json& mc = rd.block(j, "mc");
  rd.check_keys(mc, "mc", {"varpi", "fine_level_extra", "tol", "coarse_level", "guard", "inner"});
  c.mc.varpi = rd.number<std::size_t>(mc, "mc", "varpi", 1);
  if (c.mc.varpi < 1) rd.fail("mc.varpi", "must be at least 1");
  c.mc.fine_level_extra = rd.number<std::size_t>(mc, "mc", "fine_level_extra", 100);
  c.mc.tol = rd.number<double>(mc, "mc", "tol", 1e-12);
  if (!(c.mc.tol > 0.0)) rd.fail("mc.tol", "must be positive");
  c.mc.coarse_level = rd.number<std::size_t>(mc, "mc", "coarse_level", 0);
  c.mc.guard = rd.number<std::size_t>(mc, "mc", "guard", 0);
  c.mc.inner = rd.text(mc, "mc", "inner", "multigrid", {"multigrid", "direct"}) == "direct"
                   ? InnerSolve::direct
                   : InnerSolve::multigrid;
  if (sizes_ok && c.nev >= 1) {
    const std::size_t q = c.levels;
    if (c.mc.coarse_level > q) {
      rd.fail("mc.coarse_level", "exceeds levels=" + std::to_string(q));
    } else if (c.mc.coarse_level >= 1) {
      const std::size_t d = level_dim(c.grid_n, q, c.mc.coarse_level);
      if (c.nev + c.mc.guard > d)
        rd.fail("nev", "nev=" + std::to_string(c.nev) + " (plus guard " + std::to_string(c.mc.guard) +
                           ") exceeds the dimension " +
                           std::to_string(d) + " of the coarse space (level " +
                           std::to_string(c.mc.coarse_level) + ")");
    } else if (c.nev + c.mc.guard > level_dim(c.grid_n, q, q)) {
      rd.fail("nev", "nev=" + std::to_string(c.nev) + " (plus guard " + std::to_string(c.mc.guard) +
                         ") exceeds the number of unknowns " +
                         std::to_string(level_dim(c.grid_n, q, q)));
    }
  }

  const json& lb = rd.block(j, "lobpcg");
  rd.check_keys(lb, "lobpcg", {"tol", "maxit", "preconditioner", "seed"});
  c.lobpcg.tol = rd.number<double>(lb, "lobpcg", "tol", 1e-8);
  if (!(c.lobpcg.tol > 0.0)) rd.fail("lobpcg.tol", "must be positive");
  c.lobpcg.maxit = rd.number<std::size_t>(lb, "lobpcg", "maxit", 500);
  const std::string pre =
      rd.text(lb, "lobpcg", "preconditioner", "gamblet", {"gamblet", "jacobi", "identity"});
  c.preconditioner = pre == "jacobi"     ? PreconditionerKind::jacobi
                     : pre == "identity" ? PreconditionerKind::identity
                                         : PreconditionerKind::gamblet;
  c.lobpcg_seed = rd.number<std::uint64_t>(lb, "lobpcg", "seed", 1);
  if ((c.preconditioner == PreconditionerKind::gamblet || c.solver == SolverKind::hybrid) &&
      (c.mc.mg.m1 != c.mc.mg.m2 || c.mc.mg.m1 == 0) && c.solver != SolverKind::mc)
    rd.fail("mg.m1", "the gamblet preconditioner needs m1 == m2 >= 1");

  const json& hy = rd.block(j, "hybrid");
  rd.check_keys(hy, "hybrid", {"mc_tol"});
  c.hybrid_mc_tol = rd.number<double>(hy, "hybrid", "mc_tol", 1e-6);
  if (!(c.hybrid_mc_tol > 0.0)) rd.fail("hybrid.mc_tol", "must be positive");

  // Transform: "exact", "localized", or an object; default exact up to 64 cells per side.
  const bool large = c.grid_n > 64;
  c.transform.mode = large ? TransformMode::localized : TransformMode::exact;
  c.transform.track_vectors = false;
  if (j.contains("transform")) {
    const json& t = j.at("transform");
    if (t.is_string()) {
      const std::string m = t.get<std::string>();
      if (m == "exact") c.transform.mode = TransformMode::exact;
      else if (m == "localized") c.transform.mode = TransformMode::localized;
      else rd.fail("transform", "must be 'exact', 'localized' or an object (got '" + m + "')");
    } else if (t.is_object()) {
      rd.check_keys(t, "transform", {"mode", "radius", "droptol", "local_tol", "track_vectors"});
      const std::string m = rd.text(t, "transform", "mode", large ? "localized" : "exact",
                                    {"exact", "localized"});
      c.transform.mode = m == "exact" ? TransformMode::exact : TransformMode::localized;
      c.transform.radius = rd.number<std::size_t>(t, "transform", "radius", 3);
      if (c.transform.radius < 1) rd.fail("transform.radius", "must be at least 1");
      c.transform.droptol = rd.number<double>(t, "transform", "droptol", 1e-9);
      if (!(c.transform.droptol >= 0.0)) rd.fail("transform.droptol", "must be nonnegative");
      c.transform.local_tol = rd.number<double>(t, "transform", "local_tol", 1e-6);
      if (!(c.transform.local_tol > 0.0)) rd.fail("transform.local_tol", "must be positive");
      c.transform.track_vectors = rd.flag(t, "transform", "track_vectors", false);
    } else {
      rd.fail("transform", "must be a string or an object");
    }
  }
  c.transform.interpolation = c.baseline;

  const json& dg = rd.block(j, "diagnostics");
  rd.check_keys(dg, "diagnostics",
                {"condition_numbers", "contraction", "contraction_cycles", "contraction_seed"});
  c.report_condition = rd.flag(dg, "diagnostics", "condition_numbers", true);
  c.report_contraction = rd.flag(dg, "diagnostics", "contraction", true);
  c.contraction_cycles = rd.number<std::size_t>(dg, "diagnostics", "contraction_cycles", 8);
  c.contraction_seed = rd.number<std::uint64_t>(dg, "diagnostics", "contraction_seed", 1);

  c.output_dir = rd.text(j, "", "output_dir", "out");
  if (c.output_dir.empty()) rd.fail("output_dir", "must not be empty");

  if (errors.empty()) result.config = c;
  return result;
}

ConfigResult validate_config(const std::string& path) {
  ConfigResult r;
  std::ifstream in(path);
  if (!in) {
    r.errors.push_back(path + ": cannot open file");
    return r;
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    r.errors.push_back(path + ": " + e.what());
    return r;
  }
  return parse_config(j);
}

Problem build_problem(const ExperimentConfig& cfg) {
  Problem p;
  p.grid = Grid(cfg.grid_n);
  switch (cfg.problem) {
    case ProblemKind::constant: p.field = CoefficientField::constant(p.grid); break;
    case ProblemKind::checkerboard:
      p.field = gen_checkerboard(cfg.seed, cfg.eps, cfg.lo, cfg.hi, p.grid);
      break;
    case ProblemKind::coefficient_file:
      p.field = load_coefficient_file(cfg.path);
      if (!cfg.potential_path.empty()) load_potential_file(cfg.potential_path, p.field);
      break;
    case ProblemKind::anderson:
      p.field = gen_anderson(cfg.seed, cfg.eps, cfg.alpha, cfg.beta, p.grid);
      break;
  }
  p.matrices = assemble(p.grid, p.field);
  p.hierarchy = build_hierarchy(cfg.levels, p.grid);
  p.chain = MeasurementChain(p.hierarchy, p.grid);
  return p;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << contents;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

json condition_report(const GambletDecomposition& dec) {
  json out = json::object();
  for (std::size_t k = 2; k <= dec.levels(); ++k)
    out[std::to_string(k)] = condition_number(dec.B(k));
  return out;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json manifest_for(const ExperimentConfig& cfg) {
  json m;
  m["config"] = cfg.to_json();
  m["seeds"] = {{"problem", cfg.seed},
                {"lobpcg", cfg.lobpcg_seed},
                {"contraction", cfg.contraction_seed}};
  m["version"] = kVersion;
  return m;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.output_dir);
  const Problem p = build_problem(cfg);
  log << "assembled " << p.grid.interior_nodes() << " unknowns in " << seconds_since(t0) << " s\n";
  const GambletDecomposition dec = transform(p.matrices.stiffness, p.chain, cfg.transform);
  log << "transform done at " << seconds_since(t0) << " s\n";
  const LevelPencils pencils(dec, p.matrices.mass);
  const std::size_t q = dec.levels();

  EigenSet set;
  ConvergenceRecord record;
  std::size_t lobpcg_iterations = 0;
  std::size_t coarse_level = 0;
  bool converged = true;
  std::string failure;
  const bool with_phase = cfg.solver == SolverKind::hybrid;

  const MultilevelCorrector corrector(
      dec, pencils,
      [&] {
        McParams m = cfg.mc;
        if (cfg.solver == SolverKind::hybrid) m.tol = cfg.hybrid_mc_tol;
        return m;
      }(),
      cfg.solver == SolverKind::lobpcg ? 1 : cfg.nev);
  coarse_level = corrector.coarse_level();
  try {
    switch (cfg.solver) {
      case SolverKind::mc:
        set = corrector.run(record);
        break;
      case SolverKind::lobpcg: {
        coarse_level = 0;
        std::unique_ptr<Preconditioner> pre;
        if (cfg.preconditioner == PreconditionerKind::gamblet)
          pre = std::make_unique<GambletPreconditioner>(corrector.multigrid());
        else if (cfg.preconditioner == PreconditionerKind::jacobi)
          pre = std::make_unique<JacobiPreconditioner>(pencils.K(q));
        else
          pre = std::make_unique<IdentityPreconditioner>();
        Rng rng(cfg.lobpcg_seed);
        std::vector<Vector> x0;
        for (std::size_t i = 0; i < cfg.nev; ++i) x0.push_back(rng.vector(pencils.K(q).rows()));
        LobpcgParams lp = cfg.lobpcg;
        lp.level = q;
        LobpcgResult r = lobpcg(pencils.K(q), pencils.M(q), *pre, x0, lp);
        set = std::move(r.set);
        record = std::move(r.record);
        lobpcg_iterations = r.iterations;
        break;
      }
      case SolverKind::hybrid: {
        McParams m = cfg.mc;
        m.tol = cfg.hybrid_mc_tol;
        LobpcgResult r = hybrid_solve(dec, pencils, cfg.nev, m, cfg.lobpcg);
        set = std::move(r.set);
        record = std::move(r.record);
        lobpcg_iterations = r.iterations;
        break;
      }
    }
  } catch (const SolverNonConvergence& e) {
    converged = false;
    failure = e.what();
    set = e.partial();
    record = e.record();
    log << "solver did not converge: " << failure << "\n";
  }
  log << "solve done at " << seconds_since(t0) << " s\n";

  json summary;
  summary["converged"] = converged;
  if (!converged) summary["message"] = failure;
  summary["solver"] = name_of(cfg.solver);
  summary["eigenvalues"] = set.lambdas;
  summary["residuals"] = set.residuals;
  std::size_t mc_sweeps = 0;
  for (const auto& row : record.rows)
    if (row.phase == "mc") mc_sweeps = row.sweep;
  summary["iterations"] = {{"mc_sweeps", mc_sweeps}, {"lobpcg", lobpcg_iterations}};
  summary["coarse_level"] = coarse_level;
  summary["levels"] = q;
  summary["transform"] = cfg.transform.mode == TransformMode::exact ? "exact" : "localized";
  if (cfg.report_condition) summary["cond_B"] = condition_report(dec);
  if (cfg.report_contraction && q >= 2)
    summary["mg_contraction"] =
        measure_contraction(corrector.multigrid(), q, cfg.contraction_cycles, cfg.contraction_seed);
  log << "diagnostics done at " << seconds_since(t0) << " s\n";

  std::ostringstream hist;
  record.write_csv(hist, with_phase);
  write_file_atomic((fs::path(cfg.output_dir) / "history.csv").string(), hist.str());
  write_file_atomic((fs::path(cfg.output_dir) / "summary.json").string(), summary.dump(2) + "\n");
  write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(),
                    manifest_for(cfg).dump(2) + "\n");
  return converged ? 0 : 2;
}

void transform_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Problem p = build_problem(cfg);
  const GambletDecomposition dec = transform(p.matrices.stiffness, p.chain, cfg.transform);
  const fs::path dir = fs::path(cfg.output_dir) / "decomposition";
  save_decomposition(dir.string(), dec);
  json geometry = {{"grid_n", cfg.grid_n}, {"levels", cfg.levels}};
  write_file_atomic((dir / "grid.json").string(), geometry.dump(2) + "\n");
  write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(),
                    manifest_for(cfg).dump(2) + "\n");
  log << "decomposition with " << dec.levels() << " levels written to " << dir.string() << " in "
      << seconds_since(t0) << " s\n";
}

json diagnose_decomposition(const std::string& dir) {
  const GambletDecomposition dec = load_decomposition(dir);
  json out;
  out["levels"] = dec.levels();
  out["cond_B"] = condition_report(dec);
  const fs::path gpath = fs::path(dir) / "grid.json";
  if (fs::exists(gpath)) {
    std::ifstream in(gpath);
    json g;
    in >> g;
    const Grid grid(g.at("grid_n").get<std::size_t>());
    const Hierarchy hier = build_hierarchy(g.at("levels").get<std::size_t>(), grid);
    const MeasurementChain chain(hier, grid);
    json decay = json::object();
    for (std::size_t k = 1; k < dec.levels(); ++k) {
      const std::size_t s = std::size_t{1} << k;
      const std::size_t i = s / 2 + (s / 2) * s;
      const double width = chain.width(k);
      const auto n_max = static_cast<std::size_t>(std::floor(2.0 * std::sqrt(2.0) / width));
      json rows = json::array();
      for (const auto& [n, e] : decay_profile(dec, chain, k, i, n_max)) rows.push_back({n, e});
      decay[std::to_string(k)] = {{"index", i}, {"profile", rows}};
    }
    out["decay"] = decay;
  }
  return out;
}

}  // namespace geig
