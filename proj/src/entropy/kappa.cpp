#include "fibdim/entropy.hpp"

#include "fibdim/error.hpp"
#include "fibdim/parallel.hpp"
#include "fibdim/stats.hpp"

#include <algorithm>
#include <cmath>

namespace fibdim {

namespace {

constexpr std::uint64_t kEvaluationTag = 0xe7a1;
constexpr std::uint64_t kMatrixTag = 0x3a7;
constexpr std::uint64_t kReplicaTag = 0x2e91;

// Direction of A S_i modulo A S_{i-1} for the pool flag k: Gram-Schmidt of
// A b_1, ..., A b_i in the caller's work buffer; returns column i - 1.
Eigen::Ref<const Vector> pushed_direction(const Matrix& a, const FlagPool& pool, std::size_t k, int i, Matrix& work) {
  work.noalias() = a * pool.basis(k).leftCols(i);
  for (int c = 0; c < i; ++c) {
    for (int q = 0; q < c; ++q) work.col(c) -= work.col(q).dot(work.col(c)) * work.col(q);
    const double norm = work.col(c).norm();
    if (!(norm > 0.0)) throw Error(ErrorKind::DegenerateBasis, "pushed flag lost rank");
    work.col(c) /= norm;
  }
  return work.col(i - 1);
}

struct EvaluationSlot {
  double value = 0.0;
  double radius = 0.0;
  std::size_t skipped = 0;
  bool valid = false;
};

KappaEstimate summarize(const std::vector<EvaluationSlot>& slots, KappaMethod method, int i, double bandwidth) {
  std::vector<double> values;
  double radius = 0.0;
  KappaEstimate est;
  est.method = method;
  est.fiber = i;
  est.bandwidth = bandwidth;
  for (const auto& s : slots) {
    est.skipped += s.skipped;
    radius += s.radius;
    if (s.valid) values.push_back(s.value);
  }
  if (values.size() < 2) {
    throw Error(ErrorKind::BandwidthTooSmall, "kappa estimate: fewer than two evaluations had enough reference "
                                              "points inside the bandwidth");
  }
  const MeanEstimate m = mean_and_stderr(values);
  est.kappa = m.mean;
  est.stderr = m.stderr;
  est.effective_samples = values.size();
  est.mean_radius = radius / static_cast<double>(slots.size());
  return est;
}

void check_density_options(const FlagPool& pool, int i, const DensityKappaOptions& o) {
  pool.feature_count(i);
  if (o.neighbors < 8 || o.neighbors > pool.size() || o.evaluations < 2 || o.points_per_evaluation == 0) {
    throw Error(ErrorKind::InvalidArgument, "kappa: need 8 <= neighbours <= pool size and at least two evaluations");
  }
  if (!(o.bandwidth > 0.0 && o.bandwidth < 0.5 * kPi)) {
    throw Error(ErrorKind::InvalidArgument, "kappa: bandwidth must lie in (0, pi/2)");
  }
}

}  // namespace

std::string method_name(KappaMethod m) {
  return m == KappaMethod::Density ? "density" : "interval";
}

KappaEstimate kappa_density_estimator(const EnsembleSpec& spec, const FlagPool& pool, int i,
                                      const DensityKappaOptions& options, const SeededSampler& sampler) {
  check_density_options(pool, i, options);
  if (spec.dim != pool.dim()) throw Error(ErrorKind::DimensionMismatch, "kappa: pool and ensemble dimensions differ");
  const std::size_t k = options.neighbors;
  const double h = options.bandwidth;
  const std::size_t step = std::max<std::size_t>(k / options.points_per_evaluation, 1);
  const SeededSampler picks = sampler.child(kEvaluationTag);
  const SeededSampler matrices = sampler.child(kMatrixTag);
  std::vector<EvaluationSlot> slots(options.evaluations);
  parallel_for(options.evaluations, options.threads, [&](std::size_t e) {
    CounterRng rng(picks, e);
    const Flag f = pool.flag(rng.below(pool.size()));
    const LinearMap a = sample(spec, matrices, e);
    const Flag g = act_flag(a, f);
    const PartialFlag target = PartialFlag::of(g, i, options.rule);

    const Neighborhood source = pool.nearest(f, i, k, 2 * e);
    std::vector<double> pushed;
    pushed.reserve(k);
    Matrix work(spec.dim, i);
    for (std::size_t idx : source.indices) {
      pushed.push_back(target.coordinate_of(pushed_direction(a.matrix(), pool, idx, i, work)).theta);
    }
    const Neighborhood image = pool.nearest(g, i, k, 2 * e + 1);
    std::vector<double> reference;
    reference.reserve(k);
    for (std::size_t idx : image.indices) reference.push_back(target.coordinate_of(pool.column(idx, i - 1)).theta);

    const EmpiricalCircleMeasure m0(pushed);
    const EmpiricalCircleMeasure m1(std::move(reference));
    const CircularKde kde0(m0, h);
    const CircularKde kde1(m1, h);
    const double self = 1.0 / (static_cast<double>(k) * h);
    const double loo = static_cast<double>(k) / static_cast<double>(k - 1);
    CompensatedSum sum;
    std::size_t used = 0;
    EvaluationSlot& slot = slots[e];
    slot.radius = 0.5 * (source.radius + image.radius);
    for (std::size_t p = 0; p < k; p += step) {
      const FiberCoordinate x(pushed[p]);
      // A point alone in its window has leave-one-out density 0; testing the
      // count keeps rounding residue of the subtraction out of the log.
      if (kde1.local_count(x) < DensityRatio::kMinLocalCount || kde0.local_count(x) < 2) {
        ++slot.skipped;
        continue;
      }
      const double f0 = (kde0.density(x) - self) * loo;
      const double f1 = kde1.density(x);
      if (!(f0 > 0.0) || !(f1 > 0.0)) {
        ++slot.skipped;
        continue;
      }
      sum.add(std::log(f0 / f1));
      ++used;
    }
    if (used > 0) {
      slot.value = sum.value() / static_cast<double>(used);
      slot.valid = true;
    }
  });
  return summarize(slots, KappaMethod::Density, i, h);
}

KappaEstimate furstenberg_entropy_d2(const EnsembleSpec& spec, const FlagPool& pool,
                                     const DensityKappaOptions& options, const SeededSampler& sampler) {
  if (spec.dim != 2 || pool.dim() != 2) {
    throw Error(ErrorKind::DimensionMismatch, "Furstenberg entropy form needs d = 2");
  }
  check_density_options(pool, 1, options);
  if (options.neighbors >= pool.size()) {
    throw Error(ErrorKind::InvalidArgument, "Furstenberg entropy: pool must exceed the sample size");
  }
  const std::size_t k = options.neighbors;
  const double h = options.bandwidth;
  const SeededSampler picks = sampler.child(kEvaluationTag);
  const SeededSampler matrices = sampler.child(kMatrixTag);
  const Flag any = pool.flag(0);
  std::vector<EvaluationSlot> slots(options.evaluations);
  parallel_for(options.evaluations, options.threads, [&](std::size_t e) {
    // Conditioning is trivial: the neighbourhood is a random subset.
    Neighborhood subset = pool.nearest(any, 1, k, e);
    std::sort(subset.indices.begin(), subset.indices.end());
    CounterRng rng(picks, e);
    std::size_t t = 0;
    do {
      t = rng.below(pool.size());
    } while (std::binary_search(subset.indices.begin(), subset.indices.end(), t));
    const LinearMap a = sample(spec, matrices, e);
    const PartialFlag frame = PartialFlag::of(any, 1, options.rule);
    std::vector<double> base;
    std::vector<double> pushed;
    Matrix work(2, 1);
    base.reserve(k);
    pushed.reserve(k);
    for (std::size_t idx : subset.indices) {
      base.push_back(frame.coordinate_of(pool.column(idx, 0)).theta);
      pushed.push_back(frame.coordinate_of(pushed_direction(a.matrix(), pool, idx, 1, work)).theta);
    }
    const EmpiricalCircleMeasure nu(std::move(base));
    const EmpiricalCircleMeasure a_nu(std::move(pushed));
    const DensityRatio ratio(a_nu, nu, h);
    const FiberCoordinate x1 = frame.coordinate_of(pushed_direction(a.matrix(), pool, t, 1, work));
    const std::optional<double> r = ratio.try_at(x1);
    EvaluationSlot& slot = slots[e];
    if (r && *r > 0.0) {
      slot.value = std::log(*r);
      slot.valid = true;
    } else {
      slot.skipped = 1;
    }
  });
  return summarize(slots, KappaMethod::Density, 1, h);
}

KappaEstimate kappa_interval_estimator(const EnsembleSpec& spec, const FlagPool& pool, int i,
                                       const IntervalKappaOptions& options, const SeededSampler& sampler) {
  pool.feature_count(i);
  if (spec.dim != pool.dim()) throw Error(ErrorKind::DimensionMismatch, "kappa: pool and ensemble dimensions differ");
  if (options.n_max < 2 || options.replicas < 2 || options.neighbors < 8 || options.neighbors > pool.size() ||
      options.batches < 2) {
    throw Error(ErrorKind::InvalidArgument, "interval kappa: need n_max >= 2, two replicas, two batches and "
                                            "8 <= neighbours <= pool size");
  }
  const std::size_t k = options.neighbors;
  const int n_max = options.n_max;
  const bool trivial = pool.feature_count(i) == 0;
  // log((c + 1/2) / k) for a count c of k points: defined at c = 0, and
  // its small-count bias is second order rather than first.
  const double half_count = 0.5 / static_cast<double>(k);

  struct Cell {
    bool accepted = false;
    double log_ratio = 0.0;
    double target_mass = 0.0;
    double log_length = 0.0;
  };
  // cells[r * n_max + (n - 1)]
  std::vector<Cell> cells(options.replicas * static_cast<std::size_t>(n_max));
  std::vector<double> radii(options.replicas, 0.0);
  const SeededSampler replicas = sampler.child(kReplicaTag);
  parallel_for(options.replicas, options.threads, [&](std::size_t r) {
    const SeededSampler rs = replica_sampler(replicas, r);
    OrbitOptions oo;
    oo.first = -n_max;
    oo.last = options.stable.max_lookahead;
    oo.burnin = options.burnin;
    oo.fiber = i;
    oo.rule = options.rule;
    const OrbitTrace trace = forward_orbit(spec, initial_flag(spec.dim, rs), oo, rs);
    const std::uint64_t salt = mix64(r) * 64;
    const ConditionalFiberSample now = conditional_fiber_sample(pool, trace.flag(0), i, k, options.rule, salt);
    radii[r] = now.radius;
    for (int n = 1; n <= n_max; ++n) {
      Cell& cell = cells[r * static_cast<std::size_t>(n_max) + static_cast<std::size_t>(n - 1)];
      const StableLine y = oseledets_stable_line(trace, -n, options.stable);
      Arc start;
      try {
        start = stationary_interval(trace.x(-n), y.y);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::DegenerateFiberPair) throw;
        continue;
      }
      double start_mass = 0.0;
      if (trivial) {
        start_mass = now.samples.arc_mass(start.lower().theta, start.length());
      } else {
        const ConditionalFiberSample past =
            conditional_fiber_sample(pool, trace.flag(-n), i, k, options.rule, salt + static_cast<std::uint64_t>(n));
        start_mass = past.samples.arc_mass(start.lower().theta, start.length());
      }
      if (start_mass < 0.5) continue;
      const Arc j = interval_pullforward(trace, start, n);
      const double mass = now.samples.arc_mass(j.lower().theta, j.length());
      cell.accepted = true;
      cell.target_mass = mass;
      cell.log_ratio = std::log(start_mass) - std::log(mass + half_count);
      cell.log_length = std::log(j.length());
    }
  });

  KappaEstimate est;
  est.method = KappaMethod::Interval;
  est.fiber = i;
  double radius_sum = 0.0;
  for (double v : radii) radius_sum += v;
  est.mean_radius = radius_sum / static_cast<double>(options.replicas);
  const double floor = options.mass_floor_count / static_cast<double>(k);
  std::vector<double> ns;
  std::vector<double> ls;
  std::size_t accepted = 0;
  std::size_t attempted = 0;
  bool in_range = true;
  for (int n = 1; n <= n_max; ++n) {
    IntervalRow row;
    row.n = n;
    CompensatedSum lr;
    CompensatedSum tm;
    CompensatedSum ll;
    for (std::size_t r = 0; r < options.replicas; ++r) {
      const Cell& c = cells[r * static_cast<std::size_t>(n_max) + static_cast<std::size_t>(n - 1)];
      ++row.attempted;
      if (!c.accepted) continue;
      ++row.accepted;
      lr.add(c.log_ratio);
      tm.add(c.target_mass);
      ll.add(c.log_length);
    }
    if (row.accepted > 0) {
      const auto a = static_cast<double>(row.accepted);
      row.mean_log_ratio = lr.value() / a;
      row.mean_target_mass = tm.value() / a;
      row.mean_log_length = ll.value() / a;
    }
    in_range = in_range && row.accepted > 0 && row.mean_target_mass >= floor;
    row.used = in_range;
    if (row.used) {
      ns.push_back(n);
      ls.push_back(row.mean_log_ratio);
      accepted += row.accepted;
      attempted += row.attempted;
    }
    est.rows.push_back(row);
  }
  if (ns.size() < 2) {
    throw Error(ErrorKind::NoAcceptedReplicas, "interval kappa: fewer than two horizons with accepted replicas "
                                               "above the mass floor");
  }
  est.kappa = fit_line(ns, ls).slope;
  est.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(attempted);
  est.effective_samples = accepted;

  // Batch-mean slopes over the same horizons for the standard error.
  std::vector<double> slopes;
  const auto batches = static_cast<std::size_t>(options.batches);
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<double> bn;
    std::vector<double> bl;
    for (std::size_t q = 0; q < ns.size(); ++q) {
      const auto n = static_cast<int>(ns[q]);
      CompensatedSum s;
      std::size_t cnt = 0;
      for (std::size_t r = b; r < options.replicas; r += batches) {
        const Cell& c = cells[r * static_cast<std::size_t>(n_max) + static_cast<std::size_t>(n - 1)];
        if (!c.accepted) continue;
        s.add(c.log_ratio);
        ++cnt;
      }
      if (cnt == 0) continue;
      bn.push_back(n);
      bl.push_back(s.value() / static_cast<double>(cnt));
    }
    if (bn.size() >= 2) slopes.push_back(fit_line(bn, bl).slope);
  }
  if (slopes.size() < 2) throw Error(ErrorKind::NoAcceptedReplicas, "interval kappa: batches too sparse for an error");
  est.stderr = mean_and_stderr(slopes).stderr;
  return est;
}

}  // namespace fibdim
