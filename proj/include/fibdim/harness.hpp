#pragma once

#include "fibdim/config.hpp"
#include "fibdim/error.hpp"
#include "fibdim/entropy.hpp"
#include "fibdim/orbit.hpp"
#include "fibdim/spectrum.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fibdim {

inline constexpr const char* kToolVersion = "1.0.0";

enum class Stage { Spectrum, Contraction, Entropy, Dimension };
std::string stage_name(Stage s);

// A stage that declined to report because a hypothesis failed or a
// computation broke down. Hypothesis gates set exit code 2.
struct Refusal {
  Stage stage = Stage::Spectrum;
  int fiber = 0;  // 0 for ensemble-wide stages
  std::string method;
  ErrorKind kind = ErrorKind::InvalidArgument;
  std::string message;
  bool gate = false;
};

// Scalar side results (atom checks, d = 2 Furstenberg entropy, ...).
struct Diagnostic {
  Stage stage = Stage::Spectrum;
  int fiber = 0;
  std::string name;
  double value = 0.0;
  std::string detail;
};

struct ResultBundle {
  ExperimentConfig config;
  std::string tool_version = kToolVersion;
  std::optional<SpectrumEstimate> spectrum;
  std::vector<IntervalContractionReport> contraction;
  std::vector<GapInequalityRow> kappa_rows;
  std::vector<KappaEstimate> extra_kappas;  // d = 2 Furstenberg form
  std::vector<DimensionFormulaRow> dimension_rows;
  std::vector<Refusal> refusals;
  std::vector<Diagnostic> diagnostics;
  double wall_seconds = 0.0;  // summary only, never in a CSV

  bool gate_refused() const;
  bool gate_refused(Stage s) const;
};

struct StageSelection {
  bool spectrum = true;
  bool contraction = false;
  bool entropy = false;
  bool dimension = false;
};

// Runs the selected stages (dimension implies entropy). Refusals are
// recorded in the bundle instead of thrown; invalid input still throws.
// Every stage draws from its own child of SeededSampler{seed, 0}, so
// enabling a stage never changes another stage's numbers.
ResultBundle run_experiment(const ExperimentConfig& config, const StageSelection& stages);

// File names written by emit_outputs.
struct OutputManifest {
  std::vector<std::string> csv;
  std::vector<std::string> figures;
  std::string summary;
  std::string config_echo;
};

// Writes CSVs, summary.txt, config.json and (when enabled) SVG figures into
// `dir`, creating it. Throws Error(Io) naming the path on failure.
OutputManifest emit_outputs(const ResultBundle& bundle, const std::string& dir);

// Text form of the summary written to summary.txt.
std::string summary_text(const ResultBundle& bundle);

}  // namespace fibdim
