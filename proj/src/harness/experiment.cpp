#include "fibdim/harness.hpp"

#include "fibdim/error.hpp"

#include <chrono>

namespace fibdim {

namespace {

constexpr std::uint64_t kSpectrumTag = 1;
constexpr std::uint64_t kContractionTag = 2;
constexpr std::uint64_t kPoolTag = 3;
constexpr std::uint64_t kDensityTag = 4;
constexpr std::uint64_t kIntervalTag = 5;
constexpr std::uint64_t kFurstenbergTag = 6;
constexpr std::uint64_t kDimensionStageTag = 7;
constexpr std::uint64_t kAtomSalt = 0xa70;

Refusal refusal(Stage stage, int fiber, std::string method, const Error& e) {
  return Refusal{stage, fiber, std::move(method), e.kind(), e.what(), e.is_hypothesis_gate()};
}

}  // namespace

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Spectrum: return "spectrum";
    case Stage::Contraction: return "contraction";
    case Stage::Entropy: return "entropy";
    case Stage::Dimension: return "dimension";
  }
  return "unknown";
}

bool ResultBundle::gate_refused() const {
  for (const auto& r : refusals) {
    if (r.gate) return true;
  }
  return false;
}

bool ResultBundle::gate_refused(Stage s) const {
  for (const auto& r : refusals) {
    if (r.gate && r.stage == s) return true;
  }
  return false;
}

ResultBundle run_experiment(const ExperimentConfig& config, const StageSelection& stages) {
  const auto start = std::chrono::steady_clock::now();
  ResultBundle b;
  b.config = config;
  const EnsembleSpec& spec = config.ensemble;
  validate(spec);
  const SeededSampler root{config.seed, 0};
  const bool entropy = stages.entropy || stages.dimension;
  const std::vector<int> fibers = config.resolved_fibers();

  b.spectrum = lyapunov_spectrum(spec, config.spectrum, root.child(kSpectrumTag));
  const SpectrumEstimate& spectrum = *b.spectrum;
  b.diagnostics.push_back({Stage::Spectrum, 0, "sum_chi_minus_log_det", spectrum.chi.sum() - spectrum.log_det_mean,
                           "stderr " + std::to_string(spectrum.log_det_stderr)});
  b.diagnostics.push_back({Stage::Spectrum, 0, "ordered", spectrum.ordered() ? 1.0 : 0.0, ""});

  if (stages.contraction) {
    for (int i : fibers) {
      try {
        b.contraction.push_back(interval_contraction(spec, i, config.contraction_n_max, config.contraction_replicas,
                                                     root.child(kContractionTag).child(static_cast<std::uint64_t>(i)),
                                                     config.threads, config.interval.stable));
        b.diagnostics.push_back({Stage::Contraction, i, "slope_over_minus_gap",
                                 -b.contraction.back().fit.slope / spectrum.gap(i), ""});
      } catch (const Error& e) {
        b.refusals.push_back(refusal(Stage::Contraction, i, "interval_length", e));
      }
    }
  }

  if (!entropy) {
    b.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return b;
  }

  const FlagPool pool = FlagPool::build(spec, root.child(kPoolTag), config.pool);
  for (int i : fibers) {
    const auto tag = static_cast<std::uint64_t>(i);
    const NonatomicityReport atoms = fiber_atom_check(pool, i, config.density.neighbors, config.density.rule, kAtomSalt);
    b.diagnostics.push_back({Stage::Entropy, i, "max_cluster_weight", atoms.max_cluster.back(),
                             "eps " + std::to_string(atoms.eps) + ", sample " + std::to_string(atoms.sizes.back())});
    bool atomic = false;
    try {
      require_nonatomic(atoms, i);
    } catch (const Error& e) {
      atomic = true;
      b.refusals.push_back(refusal(Stage::Entropy, i, "atom_check", e));
      if (stages.dimension) b.refusals.push_back(refusal(Stage::Dimension, i, "dimension_formula", e));
    }
    if (atomic) continue;

    std::optional<KappaEstimate> density;
    std::optional<KappaEstimate> interval;
    try {
      density = kappa_density_estimator(spec, pool, i, config.density, root.child(kDensityTag).child(tag));
    } catch (const Error& e) {
      b.refusals.push_back(refusal(Stage::Entropy, i, "density", e));
    }
    if (config.interval_enabled) {
      try {
        interval = kappa_interval_estimator(spec, pool, i, config.interval, root.child(kIntervalTag).child(tag));
      } catch (const Error& e) {
        b.refusals.push_back(refusal(Stage::Entropy, i, "interval", e));
      }
    }
    if (spec.dim == 2) {
      try {
        b.extra_kappas.push_back(furstenberg_entropy_d2(spec, pool, config.density, root.child(kFurstenbergTag)));
      } catch (const Error& e) {
        b.refusals.push_back(refusal(Stage::Entropy, i, "furstenberg", e));
      }
    }
    if (!density && !interval) {
      if (stages.dimension) {
        b.refusals.push_back(refusal(Stage::Dimension, i, "dimension_formula",
                                     Error(ErrorKind::HypothesisNotMet, "no entropy estimate for fiber " +
                                                                            std::to_string(i))));
      }
      continue;
    }
    b.kappa_rows.push_back(gap_inequality_row(spectrum, i, density, interval));

    if (stages.dimension) {
      // The density form is the primary estimate; the interval form stands in
      // when it is missing.
      const KappaEstimate& kappa = density ? *density : *interval;
      try {
        b.dimension_rows.push_back(dimension_formula_row(pool, i, kappa, spectrum, config.dimension,
                                                         root.child(kDimensionStageTag).child(tag)));
      } catch (const Error& e) {
        b.refusals.push_back(refusal(Stage::Dimension, i, "dimension_formula", e));
      }
    }
  }
  b.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return b;
}

}  // namespace fibdim
