#pragma once

#include "fibdim/ensemble.hpp"
#include "fibdim/entropy.hpp"
#include "fibdim/spectrum.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fibdim {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kEnvPrefix = "FIBDIM_";

// Everything an experiment depends on. Results are a pure function of this
// struct; `threads` and `out_dir` never change a number.
struct ExperimentConfig {
  EnsembleSpec ensemble;
  nlohmann::json ensemble_json;  // as given, echoed into outputs
  std::vector<int> fibers;       // 1..d-1; empty means all
  std::uint64_t seed = 0;
  std::string out_dir = "fibdim_out";
  bool figures = true;
  int threads = 1;

  SpectrumOptions spectrum;
  PoolOptions pool;
  DensityKappaOptions density;
  bool interval_enabled = true;
  IntervalKappaOptions interval;
  DimensionOptions dimension;
  double radius_max = kPi / 8;
  double radius_ratio = 2.0;
  int radius_levels = 12;
  long contraction_n_max = 100;
  int contraction_replicas = 200;

  std::vector<int> resolved_fibers() const;
  // Pushes threads and the radius grid into the per-stage options.
  void sync();
};

// Source of environment values; the default reads the process environment.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Parses a config document. Unknown keys, wrong types, non-positive counts
// and a missing seed throw Error(Config) naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);

// Reads `path`, then applies FIBDIM_SEED, FIBDIM_THREADS, FIBDIM_OUT and
// FIBDIM_FIGURES (0 or 1) from `env`. A missing seed is only an error after
// the overrides, so a file may leave it to the environment.
ExperimentConfig load_config(const std::string& path, const EnvLookup& env = process_env(),
                             std::optional<std::uint64_t> seed_override = std::nullopt);

// Same as load_config on an in-memory document.
ExperimentConfig resolve_config(nlohmann::json doc, const EnvLookup& env = process_env(),
                                std::optional<std::uint64_t> seed_override = std::nullopt);

// Resolved document, including defaults; feeding it back reproduces the
// config.
nlohmann::json config_to_json(const ExperimentConfig& c);

// Default document for a named benchmark, sized for a quick run.
nlohmann::json default_config_json(const std::string& benchmark, std::uint64_t seed);

}  // namespace fibdim
