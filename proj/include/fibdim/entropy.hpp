#pragma once

#include "fibdim/circle_measure.hpp"
#include "fibdim/ensemble.hpp"
#include "fibdim/orbit.hpp"
#include "fibdim/spectrum.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fibdim {

struct PoolOptions {
  std::size_t size = 200000;
  int chains = 16;  // independent burned-in orbits the pool is cut from
  long burnin = 1000;
  int threads = 1;
};

// Nearest pool flags to a partial flag, with the largest distance used.
struct Neighborhood {
  std::vector<std::size_t> indices;  // sorted by distance for the first half
  double radius = 0.0;
};

// Flags sampled from the stationary measure, with the projector features
// needed to condition on a partial flag F_i.
class FlagPool {
 public:
  static FlagPool build(const EnsembleSpec& spec, const SeededSampler& sampler,
                        const PoolOptions& options);

  int dim() const { return d_; }
  std::size_t size() const { return count_; }
  Flag flag(std::size_t k) const;
  // Basis of flag k, and its column c.
  Eigen::Map<const Matrix> basis(std::size_t k) const;
  Eigen::Map<const Vector> column(std::size_t k, int c) const;

  // Number of features F_i carries; zero means conditioning is trivial (d = 2).
  int feature_count(int i) const;

  // The k pool flags whose partial flags F_i are closest to that of
  // `target` in summed Frobenius distance of the projectors onto S_j,
  // j != i. Ties are broken by a hash of (index, salt), so a trivial
  // conditioning yields a uniformly random subset. The first k/2 entries
  // are the k/2 nearest.
  Neighborhood nearest(const Flag& target, int i, std::size_t k, std::uint64_t salt) const;

 private:
  int d_ = 0;
  std::size_t count_ = 0;
  int block_ = 0;  // features per projector
  std::vector<double> bases_;
  std::vector<double> features_;
};

// Sample approximating the conditional measure nu_{F_i} of the fiber
// coordinate given the partial flag of `at`.
struct ConditionalFiberSample {
  int fiber = 0;
  std::size_t neighbors = 0;
  double radius = 0.0;
  EmpiricalCircleMeasure samples;
  // Circular W1 between the k- and k/2-neighbour samples.
  double diagnostic = 0.0;
};

// Coordinates are taken in the fiber frame of `at` under `rule`.
ConditionalFiberSample conditional_fiber_sample(const FlagPool& pool, const Flag& at, int i,
                                                std::size_t neighbors, CompletionRule rule,
                                                std::uint64_t salt);

// Builds a pool from `sampler` and conditions on an independent stationary
// flag.
ConditionalFiberSample conditional_fiber_sample(const EnsembleSpec& spec, int i, std::size_t neighbors,
                                                const PoolOptions& pool, const SeededSampler& sampler,
                                                CompletionRule rule = CompletionRule::Standard);

enum class KappaMethod { Density, Interval };
std::string method_name(KappaMethod m);

// Interval-method regression data for one horizon n.
struct IntervalRow {
  int n = 0;
  std::size_t accepted = 0;
  std::size_t attempted = 0;
  double mean_log_ratio = 0.0;  // mean of log nu_-n(I_-n) - log nu_0(J_n)
  double mean_target_mass = 0.0;  // mean nu_0(J_n) over accepted replicas
  double mean_log_length = 0.0;   // mean log length(J_n)
  bool used = false;              // inside the fitted range
};

struct KappaEstimate {
  double kappa = 0.0;  // nats per step
  double stderr = 0.0;
  KappaMethod method = KappaMethod::Density;
  int fiber = 0;
  std::size_t effective_samples = 0;
  double bandwidth = 0.0;
  double acceptance_rate = 0.0;
  double mean_radius = 0.0;
  std::size_t skipped = 0;
  std::vector<IntervalRow> rows;
};

struct DensityKappaOptions {
  std::size_t neighbors = 2000;
  std::size_t evaluations = 400;  // independent (F, A) pairs
  std::size_t points_per_evaluation = 400;
  double bandwidth = 0.05;
  CompletionRule rule = CompletionRule::Standard;
  int threads = 1;
};

// kappa_i = E log (dA nu_{F_i} / d nu_{AF_i})(AF), averaged for each (F, A)
// over the pushed conditional sample rather than at the single image point.
// The numerator density is leave-one-out. Evaluation points where the
// reference sample is too sparse for the bandwidth are skipped and counted.
KappaEstimate kappa_density_estimator(const EnsembleSpec& spec, const FlagPool& pool, int i,
                                      const DensityKappaOptions& options, const SeededSampler& sampler);

// d = 2 form: log of the ratio of kernel densities of A nu and nu at the
// image of an independent stationary point.
KappaEstimate furstenberg_entropy_d2(const EnsembleSpec& spec, const FlagPool& pool,
                                     const DensityKappaOptions& options, const SeededSampler& sampler);

struct IntervalKappaOptions {
  std::size_t neighbors = 2000;
  std::size_t replicas = 1000;
  int n_max = 24;
  double mass_floor_count = 10.0;  // fit only while mean nu_0(J_n) >= this / neighbors
  CompletionRule rule = CompletionRule::Standard;
  StableLineOptions stable;
  long burnin = 1000;
  int threads = 1;
  int batches = 20;  // stderr from batch-mean slopes
};

// Slope in n of log nu_-n(I_-n) - log nu_0(J_n) over replicas passing the
// nu_-n(I_-n) >= 1/2 filter. Throws NoAcceptedReplicas when the fit has
// fewer than two usable horizons.
KappaEstimate kappa_interval_estimator(const EnsembleSpec& spec, const FlagPool& pool, int i,
                                       const IntervalKappaOptions& options, const SeededSampler& sampler);

// Refuses with AtomicFibers when conditional samples of sizes k/4, k/2, k
// keep an eps-cluster heavier than 1/2.
NonatomicityReport fiber_atom_check(const FlagPool& pool, int i, std::size_t neighbors,
                                    CompletionRule rule, std::uint64_t salt, double eps = 1e-6);
void require_nonatomic(const NonatomicityReport& report, int i);

struct GapInequalityRow {
  int fiber = 0;
  double gap = 0.0;
  double gap_stderr = 0.0;
  std::optional<KappaEstimate> density;
  std::optional<KappaEstimate> interval;
  double combined_stderr = 0.0;
  bool inequality_holds = false;
  bool kappa_zero = false;  // consistent with an invariant fiber measure
  std::optional<double> relative_disagreement;  // |density - interval| / max
};

// kappa_i <= gap_i + 2 combined stderr for every available estimate.
GapInequalityRow gap_inequality_row(const SpectrumEstimate& spectrum, int i,
                                    std::optional<KappaEstimate> density,
                                    std::optional<KappaEstimate> interval);

struct DimensionFormulaRow {
  int fiber = 0;
  double kappa = 0.0;
  double kappa_stderr = 0.0;
  double gap = 0.0;
  double predicted = 0.0;  // kappa / gap
  double mean_slope = 0.0;
  double slope_iqr = 0.0;
  double relative_error = 0.0;
  std::vector<DimensionEstimate> points;
};

struct DimensionOptions {
  std::size_t points = 200;
  std::size_t neighbors = 5000;  // conditional sample size (ignored when trivial)
  std::size_t stationary_sample = 200000;  // sample size when conditioning is trivial
  std::vector<double> radii = geometric_radii();
  CompletionRule rule = CompletionRule::Standard;
  int threads = 1;
};

// Throws HypothesisNotMet unless kappa exceeds 2 stderr, then compares
// local dimensions of conditional samples at their own points with
// kappa / gap.
DimensionFormulaRow dimension_formula_row(const FlagPool& pool, int i, const KappaEstimate& kappa,
                                          const SpectrumEstimate& spectrum, const DimensionOptions& options,
                                          const SeededSampler& sampler);

}  // namespace fibdim
