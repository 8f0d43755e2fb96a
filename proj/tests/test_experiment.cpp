#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "geig/experiment.hpp"
#include "support.hpp"

using namespace geig;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool mentions(const std::vector<std::string>& errors, const std::string& what) {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const std::string& e) { return e.find(what) != std::string::npos; });
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("geig_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const json& j) {
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump(2);
  return path.string();
}

struct Outcome {
  int code = -1;
  std::string err;
};

Outcome run_cli(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(GEIG_BIN) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  o.err = ss.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_config(const fs::path& out) {
  return {{"problem", "constant"}, {"grid_n", 16}, {"levels", 4}, {"nev", 3}, {"output_dir", out.string()}};
}

}  // namespace

TEST_SUITE("cli_harness") {

TEST_CASE("minimal config resolves to defaults") {
  const auto r = parse_config(json{{"problem", "constant"}, {"grid_n", 64}, {"levels", 6}, {"nev", 5}});
  REQUIRE(r.config);
  CHECK(r.errors.empty());
  const auto& c = *r.config;
  CHECK(c.problem == ProblemKind::constant);
  CHECK(c.solver == SolverKind::mc);
  CHECK(c.mc.varpi == 1);
  CHECK(c.mc.mg.m1 == 2);
  CHECK(c.mc.mg.m2 == 2);
  CHECK(c.transform.mode == TransformMode::exact);
  // the resolved form parses back to the same thing
  const auto again = parse_config(c.to_json());
  REQUIRE(again.config);
  CHECK(again.config->to_json() == c.to_json());
}

TEST_CASE("config errors name the field") {
  auto r = parse_config(json{{"problem", "constant"}, {"grid_n", 24}, {"levels", 5}, {"nev", 1}});
  CHECK(!r.config);
  REQUIRE(!r.errors.empty());
  CHECK(mentions(r.errors, "grid_n not divisible by 2^levels"));

  r = parse_config(json{{"problem", "constant"}, {"grid_n", 16}, {"levels", 4}, {"nev", 1}, {"mc", {{"tol", -1.0}}}});
  CHECK(!r.config);
  REQUIRE(!r.errors.empty());
  CHECK(mentions(r.errors, "mc.tol"));

  r = parse_config(json{{"problem", "constant"}, {"grid_n", 16}, {"levels", 4}, {"nev", 1}, {"solver", "arpack"}});
  CHECK(!r.config);
  CHECK(mentions(r.errors, "solver"));

  r = parse_config(json{{"problem", "constant"}, {"grid_n", 16}, {"levels", 4}, {"nev", 1}, {"colour", 3}});
  CHECK(!r.config);

  r = parse_config(json{{"levels", 4}});
  CHECK(mentions(r.errors, "grid_n"));
  CHECK(mentions(r.errors, "nev"));
  CHECK(r.errors.size() >= 2);
}

TEST_CASE("validate and run through the binary") {
  const auto dir = scratch("run");
  const auto out = dir / "out";
  const auto cfg = write_config(dir, small_config(out));
  CHECK(run_cli("validate " + cfg, dir).code == 0);
  const auto o = run_cli("run " + cfg + " -q", dir);
  REQUIRE(o.code == 0);
  const json summary = json::parse(slurp(out / "summary.json"));
  CHECK(summary["converged"] == true);
  const auto want = testing::closed_form(16, 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::abs(summary["eigenvalues"][i].get<double>() - want[i]) <= 1e-9 * want[i]);
  const auto history = slurp(out / "history.csv");
  CHECK(history.rfind("sweep,level,pair,lambda,rel_change,residual\n", 0) == 0);

  // same inputs, same bytes
  const auto out2 = dir / "out2";
  const auto cfg2 = write_config(dir, small_config(out2));
  REQUIRE(run_cli("run " + cfg2 + " -q", dir).code == 0);
  CHECK(slurp(out2 / "history.csv") == history);
  CHECK(slurp(out2 / "summary.json") == slurp(out / "summary.json"));

  // the manifest is itself a runnable config
  const auto out3 = dir / "out3";
  REQUIRE(run_cli("run " + (out / "manifest.json").string() + " -o " + out3.string() + " -q", dir).code == 0);
  CHECK(slurp(out3 / "history.csv") == history);
}

TEST_CASE("bad configs exit with status 1 and a message") {
  const auto dir = scratch("bad");
  auto j = small_config(dir / "out");
  j["nev"] = 10000;
  auto o = run_cli("run " + write_config(dir, j), dir);
  CHECK(o.code == 1);
  CHECK(o.err.find("nev") != std::string::npos);

  j = small_config(dir / "out");
  j["grid_n"] = 24;
  j["levels"] = 5;
  o = run_cli("validate " + write_config(dir, j), dir);
  CHECK(o.code == 1);
  CHECK(o.err.find("grid_n not divisible by 2^levels") != std::string::npos);

  std::ofstream(dir / "broken.json") << "{\"grid_n\": ";
  CHECK(run_cli("run " + (dir / "broken.json").string(), dir).code == 1);
  CHECK(run_cli("run " + (dir / "missing.json").string(), dir).code == 1);
}

TEST_CASE("non-convergence exits with status 2 and keeps the history") {
  const auto dir = scratch("noconv");
  auto j = small_config(dir / "out");
  j["mc"] = {{"tol", 1e-300}, {"fine_level_extra", 1}};
  const auto o = run_cli("run " + write_config(dir, j) + " -q", dir);
  CHECK(o.code == 2);
  const json summary = json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(summary["converged"] == false);
  CHECK(!slurp(dir / "out" / "history.csv").empty());
}

TEST_CASE("diag reports the same condition numbers as the run") {
  const auto dir = scratch("diag");
  auto j = small_config(dir / "out");
  j["problem"] = {{"type", "checkerboard"}, {"seed", 3}, {"lo", 0.05}, {"hi", 20.0}};
  const auto cfg = write_config(dir, j);
  REQUIRE(run_cli("run " + cfg + " -q", dir).code == 0);
  REQUIRE(run_cli("transform " + cfg, dir).code == 0);
  REQUIRE(run_cli("diag " + (dir / "out" / "decomposition").string(), dir).code == 0);
  const json summary = json::parse(slurp(dir / "out" / "summary.json"));
  const json diag = json::parse(slurp(dir / "stdout.txt"));
  REQUIRE(diag["cond_B"].size() == summary["cond_B"].size());
  for (const auto& [level, value] : summary["cond_B"].items())
    CHECK(diag["cond_B"][level].get<double>() == doctest::Approx(value.get<double>()).epsilon(1e-12));
  CHECK(diag.contains("decay"));
}

}  // TEST_SUITE
