#include "fibdim/spectrum.hpp"

#include "fibdim/error.hpp"
#include "fibdim/orbit.hpp"
#include "fibdim/parallel.hpp"
#include "fibdim/stats.hpp"

#include <cmath>

namespace fibdim {

SeededSampler replica_sampler(const SeededSampler& base, std::size_t r) {
  return base.child(r);
}

double SpectrumEstimate::gap_stderr(int i) const {
  std::vector<double> diffs;
  for (int r = 0; r < per_replica.rows(); ++r) {
    diffs.push_back(per_replica(r, i - 1) - per_replica(r, i));
  }
  return mean_and_stderr(diffs).stderr;
}

bool SpectrumEstimate::ordered() const {
  for (int k = 1; k < chi.size(); ++k) {
    if (chi(k) > chi(k - 1)) return false;
  }
  return true;
}

SpectrumEstimate lyapunov_spectrum(const EnsembleSpec& spec, const SpectrumOptions& options,
                                   const SeededSampler& sampler) {
  if (options.steps < 1 || options.replicas < 2 || options.burnin < 0) {
    throw Error(ErrorKind::InvalidArgument,
                "lyapunov_spectrum: need steps >= 1, replicas >= 2 and burnin >= 0");
  }
  const int d = spec.dim;
  if (options.start && options.start->dim() != d) {
    throw Error(ErrorKind::DimensionMismatch, "lyapunov_spectrum: start flag dimension");
  }
  const auto reps = static_cast<std::size_t>(options.replicas);
  std::vector<Vector> replica_chi(reps);
  std::vector<double> replica_logdet(reps);

  parallel_for(reps, options.threads, [&](std::size_t r) {
    const SeededSampler s = replica_sampler(sampler, r);
    Flag f = options.start ? *options.start : initial_flag(d, s);
    for (long n = -options.burnin; n < 0; ++n) {
      f = act_flag(sample(spec, s, draw_index(n)), f);
    }
    std::vector<CompensatedSum> sums(static_cast<std::size_t>(d));
    CompensatedSum det_sum;
    for (long n = 0; n < options.steps; ++n) {
      const LinearMap a = sample(spec, s, draw_index(n));
      FlagStep step = FlagStep::apply(a, f);
      for (int j = 1; j <= d; ++j) sums[j - 1].add(step.log_dets(j) - step.log_dets(j - 1));
      det_sum.add(std::log(std::fabs(a.matrix().partialPivLu().determinant())));
      f = std::move(step.image);
    }
    Vector chi(d);
    const double steps = static_cast<double>(options.steps);
    for (int j = 0; j < d; ++j) chi(j) = sums[j].value() / steps;
    replica_chi[r] = chi;
    replica_logdet[r] = det_sum.value() / steps;
  });

  SpectrumEstimate est;
  est.horizon = options.steps;
  est.replicas = options.replicas;
  est.chi.resize(d);
  est.stderr.resize(d);
  est.per_replica.resize(options.replicas, d);
  for (std::size_t r = 0; r < reps; ++r) est.per_replica.row(static_cast<int>(r)) = replica_chi[r].transpose();
  for (int j = 0; j < d; ++j) {
    std::vector<double> col(reps);
    for (std::size_t r = 0; r < reps; ++r) col[r] = replica_chi[r](j);
    const MeanEstimate m = mean_and_stderr(col);
    est.chi(j) = m.mean;
    est.stderr(j) = m.stderr;
  }
  const MeanEstimate det = mean_and_stderr(replica_logdet);
  est.log_det_mean = det.mean;
  est.log_det_stderr = det.stderr;
  return est;
}

}  // namespace fibdim
