#include "fibdim/cli.hpp"

#include "fibdim/csv.hpp"
#include "fibdim/ensemble_io.hpp"
#include "fibdim/error.hpp"
#include "fibdim/harness.hpp"
#include "fibdim/infotheory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>

namespace fibdim {

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string config;
  std::string benchmark;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool no_figures = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  auto* cfg = sub->add_option("--config", o.config, "experiment config (JSON)");
  auto* bm = sub->add_option("--benchmark", o.benchmark, "named benchmark with default settings");
  cfg->excludes(bm);
  sub->add_option("--seed", o.seed, "experiment seed (overrides config and FIBDIM_SEED)");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--threads", o.threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  sub->add_flag("--no-figures", o.no_figures, "skip SVG figures");
}

void error_record(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
}

ExperimentConfig build_config(const CommonOptions& o) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config, process_env(), o.seed);
  } else if (!o.benchmark.empty()) {
    json doc = default_config_json(o.benchmark, 0);
    doc.erase("seed");
    c = resolve_config(std::move(doc), process_env(), o.seed);
  } else {
    throw Error(ErrorKind::Config, "give --config PATH or --benchmark NAME");
  }
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.threads > 0) c.threads = o.threads;
  if (o.no_figures) c.figures = false;
  c.sync();
  return c;
}

// Exit code of a finished run: refusals of the requested stages decide it.
int exit_code(const ResultBundle& b, const std::vector<Stage>& stages, bool allow_gates, std::ostream& err) {
  int code = kExitOk;
  for (const auto& r : b.refusals) {
    if (std::find(stages.begin(), stages.end(), r.stage) == stages.end()) continue;
    err << json{{"refusal",
                 {{"stage", stage_name(r.stage)},
                  {"fiber", r.fiber},
                  {"method", r.method},
                  {"kind", std::string(to_string(r.kind))},
                  {"gate", r.gate},
                  {"message", r.message}}}}
               .dump()
        << "\n";
    if (!r.gate) {
      code = kExitFailure;
    } else if (!allow_gates && code == kExitOk) {
      code = kExitGate;
    }
  }
  return code;
}

int run_stages(const CommonOptions& o, const StageSelection& sel, const std::vector<Stage>& judged, bool allow_gates,
               bool verify, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = build_config(o);
  const ResultBundle b = run_experiment(c, sel);
  const OutputManifest m = emit_outputs(b, c.out_dir);
  out << summary_text(b);
  out << "\nwrote";
  for (const auto& f : m.csv) out << " " << f;
  for (const auto& f : m.figures) out << " " << f;
  out << " " << m.summary << " " << m.config_echo << " to " << c.out_dir << "\n";
  int code = exit_code(b, judged, allow_gates, err);
  if (verify) {
    bool holds = true;
    for (const auto& row : b.kappa_rows) holds = holds && row.inequality_holds;
    out << "gap inequality: " << (holds ? "holds" : "FAILS") << " on " << b.kappa_rows.size() << " fiber(s)\n";
    out << "dimension formula: " << b.dimension_rows.size() << " fiber(s) reported"
        << (b.gate_refused(Stage::Dimension) ? ", refused where hypotheses fail" : "") << "\n";
    if (!holds) {
      error_record(err, "CheckFailed", "entropy exceeds the exponent gap beyond two combined standard errors",
                   kExitFailure);
      code = kExitFailure;
    }
  }
  return code;
}

int cmd_validate(const CommonOptions& o, const std::string& ensemble_file, std::ostream& out) {
  EnsembleSpec spec;
  if (!ensemble_file.empty()) {
    spec = load_ensemble(ensemble_file);
  } else if (!o.config.empty() || !o.benchmark.empty()) {
    if (!o.config.empty()) {
      spec = load_config(o.config, process_env(), o.seed.value_or(0)).ensemble;
    } else {
      spec = benchmark_ensemble(o.benchmark);
    }
  } else {
    throw Error(ErrorKind::Config, "give --ensemble PATH, --config PATH or --benchmark NAME");
  }
  const ValidationReport rep = validate(spec);
  out << "ensemble " << rep.name << " (d = " << spec.dim << ", " << kind_name(spec) << "): valid\n";
  for (int j = 0; j < static_cast<int>(rep.mean_abs_log_sigma.size()); ++j) {
    out << "E|log sigma_" << j + 1 << "| = " << format_double(rep.mean_abs_log_sigma(j));
    if (!rep.exact) out << " +- " << format_double(rep.stderr_abs_log_sigma(j));
    out << "\n";
  }
  out << "E log|det A| = " << format_double(rep.mean_log_det) << (rep.exact ? " (exact)" : " (Monte Carlo)") << "\n";
  return kExitOk;
}

struct OracleLine {
  std::string name;
  double value;
  double expected;
  double tolerance;
};

int cmd_oracle(std::size_t sweep, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  std::vector<OracleLine> lines;
  const DiscreteJoint pair = make_joint({"X", "Y"}, {2, 2}, {0.4, 0.1, 0.1, 0.4});
  lines.push_back({"I(X,Y) correlated pair", mutual_information(pair, {"X"}, {"Y"}),
                   0.8 * std::log(1.6) + 0.2 * std::log(0.4), 1e-14});
  const DiscreteJoint x = xor_example();
  lines.push_back({"xor I(X,Y)", mutual_information(x, {"X"}, {"Y"}), 0.0, 1e-15});
  lines.push_back({"xor I(X,Y|Z)", conditional_mutual_information(x, {"X"}, {"Y"}, {"Z"}), std::log(2.0), 1e-14});
  const DiscreteJoint m = markov_example();
  lines.push_back({"markov I(X1,X3|X2)", conditional_mutual_information(m, {"X1"}, {"X3"}, {"X2"}), 0.0, 1e-15});
  lines.push_back({"markov I(X1,X3) > 0", mutual_information(m, {"X1"}, {"X3"}) > 0.0 ? 1.0 : 0.0, 1.0, 0.0});
  double chain_max = 0.0;
  double gyp_max = 0.0;
  const SeededSampler sampler{seed, 0};
  for (std::size_t r = 0; r < sweep; ++r) {
    const std::vector<std::size_t> sizes{2 + r % 3, 2 + (r / 3) % 3, 2 + (r / 9) % 2, 2};
    const DiscreteJoint j = random_joint(sizes, r % 2 == 0 ? 1.0 : 0.2, sampler, r);
    chain_max = std::max(chain_max, chain_rule_check(j, {"X"}, {"Y"}, {"Z"}, {"W"}).residual);
    gyp_max = std::max(gyp_max, gyp_check(j, "X", "Y").residual);
  }
  lines.push_back({"max chain-rule residual (" + std::to_string(sweep) + " joints)", chain_max, 0.0, 1e-12});
  lines.push_back({"max partition/density residual (" + std::to_string(sweep) + " joints)", gyp_max, 0.0, 1e-12});

  bool ok = true;
  std::unique_ptr<CsvWriter> csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    csv = std::make_unique<CsvWriter>((std::filesystem::path(out_dir) / "oracle.csv").string(), "oracle", 1,
                                      std::vector<std::string>{"check", "value", "expected", "tolerance", "pass"});
  }
  for (const auto& l : lines) {
    const bool pass = std::fabs(l.value - l.expected) <= l.tolerance;
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << l.name << ": " << format_double(l.value) << " (expected "
        << format_double(l.expected) << ")\n";
    if (csv) {
      csv->cell(l.name).cell(l.value).cell(l.expected).cell(l.tolerance).cell(pass ? 1 : 0);
      csv->end_row();
    }
  }
  if (csv) csv->close();
  return ok ? kExitOk : kExitFailure;
}

int cmd_bench(const std::string& name, long steps, std::uint64_t seed, std::ostream& out) {
  const EnsembleSpec spec = benchmark_ensemble(name);
  SpectrumOptions o;
  o.steps = std::max(steps / 2, 1L);
  o.burnin = 0;
  o.replicas = 2;
  const auto t0 = std::chrono::steady_clock::now();
  const SpectrumEstimate s = lyapunov_spectrum(spec, o, SeededSampler{seed, 0});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  steps = 2 * o.steps;
  out << "ensemble " << name << ": " << steps << " orbit steps in " << format_double(std::round(secs * 1000) / 1000)
      << " s (" << format_double(std::round(static_cast<double>(steps) / std::max(secs, 1e-9))) << " steps/s), chi_1 = "
      << format_double(s.chi(0)) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy, exponent gaps and fiber dimensions of random matrix products"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonOptions validate_o;
  std::string ensemble_file;
  auto* validate_cmd = app.add_subcommand("validate", "check an ensemble's integrability conditions");
  validate_cmd->add_option("--config", validate_o.config, "experiment config (JSON)");
  validate_cmd->add_option("--benchmark", validate_o.benchmark, "named benchmark");
  validate_cmd->add_option("--ensemble", ensemble_file, "ensemble description (JSON)");

  CommonOptions spectrum_o;
  CommonOptions entropy_o;
  CommonOptions dimension_o;
  CommonOptions verify_o;
  bool allow_gates = false;
  add_common(app.add_subcommand("spectrum", "Lyapunov spectrum"), spectrum_o);
  add_common(app.add_subcommand("entropy", "fiber entropies against exponent gaps"), entropy_o);
  add_common(app.add_subcommand("dimension", "fiber dimensions against entropy / gap"), dimension_o);
  auto* verify_cmd = app.add_subcommand("verify", "all stages end to end");
  add_common(verify_cmd, verify_o);
  verify_cmd->add_flag("--allow-gates", allow_gates, "exit 0 when only hypothesis gates refused");

  std::size_t sweep = 10000;
  std::uint64_t oracle_seed = 1;
  std::string oracle_out;
  auto* oracle_cmd = app.add_subcommand("oracle", "exact information-theory checks on finite joints");
  oracle_cmd->add_option("--count", sweep, "random joints in the sweep")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--seed", oracle_seed, "seed of the random sweep");
  oracle_cmd->add_option("--out", oracle_out, "directory for oracle.csv");

  std::string bench_name = "bern2";
  long bench_steps = 1000000;
  std::uint64_t bench_seed = 1;
  auto* bench_cmd = app.add_subcommand("bench", "orbit throughput");
  bench_cmd->add_option("--benchmark", bench_name, "named benchmark");
  bench_cmd->add_option("--steps", bench_steps, "orbit steps")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_record(err, "Usage", e.what(), kExitFailure);
    return kExitFailure;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "validate") return cmd_validate(validate_o, ensemble_file, out);
    if (name == "spectrum") {
      return run_stages(spectrum_o, {true, false, false, false}, {Stage::Spectrum}, false, false, out, err);
    }
    if (name == "entropy") {
      return run_stages(entropy_o, {true, false, true, false}, {Stage::Entropy}, false, false, out, err);
    }
    if (name == "dimension") {
      return run_stages(dimension_o, {true, false, true, true}, {Stage::Dimension}, false, false, out, err);
    }
    if (name == "verify") {
      return run_stages(verify_o, {true, true, true, true},
                        {Stage::Spectrum, Stage::Contraction, Stage::Entropy, Stage::Dimension}, allow_gates, true,
                        out, err);
    }
    if (name == "oracle") return cmd_oracle(sweep, oracle_seed, oracle_out, out);
    if (name == "bench") return cmd_bench(bench_name, bench_steps, bench_seed, out);
  } catch (const Error& e) {
    const int code = e.is_hypothesis_gate() ? kExitGate : kExitFailure;
    error_record(err, std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    error_record(err, "Internal", e.what(), kExitFailure);
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace fibdim
