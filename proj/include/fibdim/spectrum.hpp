#pragma once

#include "fibdim/ensemble.hpp"

#include <optional>

namespace fibdim {

struct SpectrumOptions {
  long steps = 100000;  // per replica, after burn-in
  long burnin = 1000;
  int replicas = 8;
  int threads = 1;
  // Starting flag for every replica; default is a Haar-random flag per
  // replica.
  std::optional<Flag> start;
};

// Exponents relative to the stationary measure, chi_1 + ... + chi_i =
// E log|det_{S_i} A|. Ordering chi_1 >= ... >= chi_d is reported, not
// enforced.
struct SpectrumEstimate {
  Vector chi;
  Vector stderr;
  Matrix per_replica;  // replicas x d
  // E log|det A| over the same draws, by LU, with its standard error.
  double log_det_mean = 0.0;
  double log_det_stderr = 0.0;
  long horizon = 0;
  int replicas = 0;

  double gap(int i) const { return chi(i - 1) - chi(i); }
  // Standard error of chi_i - chi_{i+1} from the per-replica differences.
  double gap_stderr(int i) const;
  bool ordered() const;
};

// Replica r runs on sampler.child(r). Results do not depend on `threads`.
SpectrumEstimate lyapunov_spectrum(const EnsembleSpec& spec, const SpectrumOptions& options,
                                   const SeededSampler& sampler);

// Sampler of replica r derived from an experiment-level sampler.
SeededSampler replica_sampler(const SeededSampler& base, std::size_t r);

}  // namespace fibdim
