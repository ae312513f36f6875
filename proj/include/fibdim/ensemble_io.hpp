#pragma once

#include "fibdim/ensemble.hpp"

#include <json.hpp>

#include <string>

namespace fibdim {

inline constexpr int kEnsembleSchemaVersion = 1;

// JSON form of an ensemble. Either a named benchmark
//   {"benchmark": "bern2"}
// or an explicit description
//   {"schema_version": 1, "name": "...", "dim": 2, "kind": "finite_support",
//    "atoms": [{"matrix": [[2, 0], [0, 0.5]], "probability": 1.0}]}
// Other kinds use "stretch" (rotation_invariant), "log_mean"/"log_sd"
// (diagonal) or "atoms" plus "angle" (perturbed). Unknown keys are errors.
EnsembleSpec ensemble_from_json(const nlohmann::json& j);
nlohmann::json ensemble_to_json(const EnsembleSpec& spec);

EnsembleSpec load_ensemble(const std::string& path);

}  // namespace fibdim
