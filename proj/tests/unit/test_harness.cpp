#include "fibdim/cli.hpp"
#include "fibdim/config.hpp"
#include "fibdim/csv.hpp"
#include "fibdim/error.hpp"
#include "fibdim/harness.hpp"
#include "fibdim/svg.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace fibdim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& name) -> std::optional<std::string> {
    const auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

const EnvLookup kNoEnv = env_of({});

// Desk-sized settings so every stage finishes in about a second.
json small_config(const std::string& benchmark, std::uint64_t seed) {
  json j = default_config_json(benchmark, seed);
  j["spectrum"] = {{"steps", 20000}, {"replicas", 4}};
  j["pool"] = {{"size", 20000}, {"chains", 4}, {"burnin", 300}};
  j["entropy"] = {{"neighbors", 1000},
                  {"evaluations", 60},
                  {"points_per_evaluation", 100},
                  {"interval", {{"replicas", 40}, {"n_max", 12}, {"batches", 4}}}};
  j["dimension"] = {{"points", 20}, {"neighbors", 1000}, {"stationary_sample", 10000}};
  j["contraction"] = {{"n_max", 30}, {"replicas", 20}};
  return j;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fibdim_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const json& j) {
  const std::string path = (dir / "config.json").string();
  std::ofstream(path) << j.dump(2);
  return path;
}

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fibdim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void expect_config_error(const json& j, const std::string& fragment) {
  try {
    resolve_config(j, kNoEnv);
    FAIL("expected a config error mentioning " << fragment);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("config: defaults, schema version and unknown keys") {
  const ExperimentConfig c = resolve_config(small_config("bern2", 9), kNoEnv);
  CHECK(c.seed == 9);
  CHECK(c.ensemble.name == "bern2");
  CHECK(c.resolved_fibers() == std::vector<int>{1});
  CHECK(c.dimension.radii.size() == 12);
  CHECK(c.interval.neighbors == c.density.neighbors);

  json j = small_config("bern2", 9);
  j["entropy"]["bandwith"] = 0.1;
  expect_config_error(j, "entropy.bandwith");
  j = small_config("bern2", 9);
  j["extra"] = 1;
  expect_config_error(j, "unknown key 'extra'");
  j = small_config("bern2", 9);
  j["schema_version"] = 2;
  expect_config_error(j, "schema_version");
  j = small_config("bern2", 9);
  j.erase("schema_version");
  expect_config_error(j, "schema_version");
  j = small_config("bern2", 9);
  j.erase("seed");
  expect_config_error(j, "seed is mandatory");
  j = small_config("bern2", 9);
  j["spectrum"]["steps"] = 0;
  expect_config_error(j, "spectrum.steps");
  j = small_config("bern2", 9);
  j["pool"]["size"] = -5;
  expect_config_error(j, "pool.size");
  j = small_config("bern2", 9);
  j["spectrum"]["steps"] = "many";
  expect_config_error(j, "spectrum.steps");
  j = small_config("bern2", 9);
  j["fibers"] = {2};
  expect_config_error(j, "fibers");
  j = small_config("bern2", 9);
  j["pool"]["size"] = 5000;
  expect_config_error(j, "pool.size");
  j = small_config("bern2", 9);
  j["entropy"]["bandwidth"] = 2.0;
  expect_config_error(j, "bandwidth");
  j = small_config("bern2", 9);
  j["ensemble"] = {{"benchmark", "nope"}};
  CHECK_THROWS_AS(resolve_config(j, kNoEnv), Error);
}

TEST_CASE("config: environment overrides and explicit seed precedence") {
  json j = small_config("diag3eps", 1);
  j.erase("seed");
  const ExperimentConfig c = resolve_config(
      j, env_of({{"FIBDIM_SEED", "77"}, {"FIBDIM_THREADS", "3"}, {"FIBDIM_OUT", "/tmp/x"}, {"FIBDIM_FIGURES", "0"}}));
  CHECK(c.seed == 77);
  CHECK(c.threads == 3);
  CHECK(c.density.threads == 3);
  CHECK(c.out_dir == "/tmp/x");
  CHECK_FALSE(c.figures);
  CHECK(c.resolved_fibers() == std::vector<int>{1, 2});
  CHECK(resolve_config(j, env_of({{"FIBDIM_SEED", "77"}}), 5).seed == 5);
  CHECK_THROWS_AS(resolve_config(j, env_of({{"FIBDIM_SEED", "-1"}})), Error);
  CHECK_THROWS_AS(resolve_config(j, env_of({{"FIBDIM_SEED", "12x"}})), Error);
  CHECK_THROWS_AS(resolve_config(j, env_of({{"FIBDIM_SEED", "1"}, {"FIBDIM_FIGURES", "yes"}})), Error);
}

TEST_CASE("config: resolved document reproduces the config") {
  json j = small_config("diag3eps", 4);
  j["fibers"] = {2};
  j["completion"] = "rotated";
  const ExperimentConfig a = resolve_config(j, kNoEnv);
  const json echo = config_to_json(a);
  const ExperimentConfig b = config_from_json(echo);
  CHECK(config_to_json(b) == echo);
  CHECK(b.fibers == std::vector<int>{2});
  CHECK(b.density.rule == CompletionRule::Rotated);
  CHECK(b.dimension.rule == CompletionRule::Rotated);

  const fs::path dir = scratch("load");
  const ExperimentConfig c = load_config(write_config(dir, j), kNoEnv);
  CHECK(config_to_json(c) == echo);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_config((dir / "broken.json").string(), kNoEnv), Error);
  CHECK_THROWS_AS(load_config((dir / "missing.json").string(), kNoEnv), Error);
}

TEST_CASE("cli: spectrum of the deterministic diagonal ensemble is exact") {
  const fs::path dir = scratch("diag2");
  const CliRun r = cli({"spectrum", "--benchmark", "diag2", "--seed", "1", "--out", dir.string()});
  CHECK(r.code == kExitOk);
  const CsvTable t = read_csv((dir / "spectrum.csv").string());
  REQUIRE(t.rows.size() >= 2);
  CHECK(t.rows[0][0] == "chi");
  CHECK(std::fabs(std::stod(t.rows[0][2]) - std::log(2.0)) < 1e-12);
  CHECK(std::fabs(std::stod(t.rows[1][2])) < 1e-12);
  CHECK(slurp(dir / "spectrum.csv").rfind("# schema: spectrum/1\n", 0) == 0);
}

TEST_CASE("cli: usage and input errors exit 1 with an error record") {
  CHECK(cli({}).code == kExitFailure);
  CHECK(cli({"frobnicate"}).code == kExitFailure);
  const CliRun no_seed = cli({"spectrum", "--benchmark", "bern2", "--out", scratch("noseed").string()});
  CHECK(no_seed.code == kExitFailure);
  const json record = json::parse(no_seed.err.substr(0, no_seed.err.find('\n')));
  CHECK(record["error"]["kind"] == "Config");
  CHECK(record["error"]["exit_code"] == 1);
  CHECK(cli({"validate", "--benchmark", "nope"}).code == kExitFailure);
  CHECK(cli({"spectrum"}).code == kExitFailure);

  const fs::path dir = scratch("badconfig");
  json j = small_config("bern2", 1);
  j["typo"] = true;
  CHECK(cli({"spectrum", "--config", write_config(dir, j)}).code == kExitFailure);

  json bad;
  bad["name"] = "singular";
  bad["dim"] = 2;
  bad["kind"] = "finite_support";
  bad["schema_version"] = 1;
  bad["atoms"] = json::array({json{{"matrix", {{1.0, 0.0}, {0.0, 0.0}}}, {"probability", 1.0}}});
  std::ofstream(dir / "singular.json") << bad.dump();
  const CliRun v = cli({"validate", "--ensemble", (dir / "singular.json").string()});
  CHECK(v.code == kExitFailure);
  CHECK(v.err.find("InvalidSpec") != std::string::npos);
  CHECK(cli({"validate", "--benchmark", "diag3eps"}).code == kExitOk);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("cli: hypothesis gates refuse dimension with exit 2") {
  // Invariant fiber measure: entropy is 0 and the dimension formula is refused.
  const fs::path rot = scratch("rot2");
  const CliRun r = cli({"dimension", "--config", write_config(rot, small_config("rot2", 2)), "--out", rot.string()});
  CHECK(r.code == kExitGate);
  CHECK(r.err.find("HypothesisNotMet") != std::string::npos);
  CHECK(read_csv((rot / "dimension.csv").string()).rows.empty());

  // Deterministic ensemble: the fiber measure is a point mass.
  const fs::path diag = scratch("diag2_gate");
  const CliRun d = cli({"dimension", "--config", write_config(diag, small_config("diag2", 2)), "--out", diag.string()});
  CHECK(d.code == kExitGate);
  CHECK(d.err.find("AtomicFibers") != std::string::npos);
  CHECK(read_csv((diag / "dimension.csv").string()).rows.empty());
  CHECK(read_csv((diag / "kappa.csv").string()).rows.empty());

  // verify reports the gap inequality and refuses only the dimension leg.
  const fs::path v = scratch("rot2_verify");
  const std::string cfg = write_config(v, small_config("rot2", 2));
  const CliRun strict = cli({"verify", "--config", cfg, "--out", v.string(), "--no-figures"});
  CHECK(strict.code == kExitGate);
  CHECK(strict.out.find("gap inequality: holds") != std::string::npos);
  const CliRun lenient = cli({"verify", "--config", cfg, "--out", v.string(), "--allow-gates", "--no-figures"});
  CHECK(lenient.code == kExitOk);
  CHECK(fs::exists(v / "kappa.csv"));
  CHECK_FALSE(fs::exists(v / "kappa_gap.svg"));
}

TEST_CASE("cli: verify output is byte-identical across runs and thread counts") {
  const fs::path a = scratch("rep_a");
  const fs::path b = scratch("rep_b");
  const fs::path c = scratch("rep_c");
  const std::string cfg = write_config(a, small_config("bern2", 123));
  CHECK(cli({"verify", "--config", cfg, "--out", (a / "out").string(), "--threads", "1"}).code == kExitOk);
  CHECK(cli({"verify", "--config", cfg, "--out", (b / "out").string(), "--threads", "1"}).code == kExitOk);
  CHECK(cli({"verify", "--config", cfg, "--out", (c / "out").string(), "--threads", "4"}).code == kExitOk);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a / "out")) {
    if (entry.path().extension() != ".csv") continue;
    const std::string name = entry.path().filename().string();
    const std::string first = slurp(entry.path());
    CHECK_MESSAGE(first == slurp(b / "out" / name), name);
    CHECK_MESSAGE(first == slurp(c / "out" / name), name);
    ++compared;
  }
  CHECK(compared == 8);
  for (const char* fig : {"dimension_fiber1.svg", "contraction_fiber1.svg", "kappa_gap.svg"}) {
    CHECK(fs::exists(a / "out" / fig));
  }
  // A different seed changes the numbers.
  const fs::path d = scratch("rep_d");
  CHECK(cli({"verify", "--config", cfg, "--seed", "124", "--out", d.string()}).code == kExitOk);
  CHECK(slurp(a / "out" / "kappa.csv") != slurp(d / "kappa.csv"));
}

TEST_CASE("outputs: manifest, schemas and figure data") {
  ExperimentConfig c = resolve_config(small_config("bern2", 8), kNoEnv);
  const ResultBundle b = run_experiment(c, {true, true, true, true});
  REQUIRE(b.spectrum);
  CHECK(b.refusals.empty());
  REQUIRE(b.kappa_rows.size() == 1);
  REQUIRE(b.dimension_rows.size() == 1);
  const fs::path dir = scratch("manifest") / "nested";
  const OutputManifest m = emit_outputs(b, dir.string());
  for (const auto& f : m.csv) {
    const std::string text = slurp(dir / f);
    const std::string schema = "# schema: " + f.substr(0, f.size() - 4) + "/1\n";
    CHECK_MESSAGE(text.rfind(schema, 0) == 0, f);
  }
  CHECK(m.figures.size() == 3);
  // The dimension figure plots exactly the ball masses in ball_mass.csv.
  const CsvTable masses = read_csv((dir / "ball_mass.csv").string());
  CHECK(masses.rows.size() == b.dimension_rows[0].points.size() * c.dimension.radii.size());
  const CsvTable contraction = read_csv((dir / "contraction.csv").string());
  CHECK(contraction.rows.size() == static_cast<std::size_t>(c.contraction_n_max));
  const CsvTable kappa = read_csv((dir / "kappa.csv").string());
  CHECK(kappa.rows.size() == 3);  // density, interval, furstenberg
  const std::string summary = slurp(dir / "summary.txt");
  CHECK(summary.find("[entropy]") != std::string::npos);
  CHECK(summary.find("seed: 8") != std::string::npos);
  CHECK(config_from_json(json::parse(slurp(dir / "config.json"))).seed == 8);
  CHECK_THROWS_AS(emit_outputs(b, (dir / "summary.txt" / "sub").string()), Error);
}

TEST_CASE("svg: self-contained documents that skip non-finite data") {
  XyPlot p;
  p.title = "a < b";
  p.series.push_back({"pts", {0.0, 1.0, NAN}, {0.0, 2.0, 3.0}, false, "#000"});
  const std::string s = render_svg(p);
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(s.find("a &lt; b") != std::string::npos);
  std::size_t circles = 0;
  for (std::size_t k = s.find("<circle"); k != std::string::npos; k = s.find("<circle", k + 1)) ++circles;
  CHECK(circles == 2);
  CHECK(s.find("nan") == std::string::npos);

  BarChart bars;
  bars.categories = {"one"};
  bars.series = {"x", "y"};
  bars.values = {{1.0, NAN}};
  bars.errors = {{0.1, NAN}};
  const std::string t = render_svg(bars);
  CHECK(t.find("nan") == std::string::npos);
  CHECK(t.find("<line") != std::string::npos);
}

TEST_CASE("cli: oracle and bench") {
  const fs::path dir = scratch("oracle");
  const CliRun r = cli({"oracle", "--count", "300", "--out", dir.string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(read_csv((dir / "oracle.csv").string()).rows.size() == 7);
  const CliRun b = cli({"bench", "--benchmark", "bern2", "--steps", "10000"});
  CHECK(b.code == kExitOk);
  CHECK(b.out.find("steps/s") != std::string::npos);
}
