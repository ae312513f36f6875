#pragma once

#include "fibdim/flag.hpp"
#include "fibdim/rng.hpp"

#include <string>
#include <variant>
#include <vector>

namespace fibdim {

struct Atom {
  Matrix matrix;
  double probability = 0.0;
};

// Finitely many matrices with given probabilities.
struct FiniteSupport {
  std::vector<Atom> atoms;
};

// A = O * stretch with O Haar-distributed on SO(d).
struct RotationInvariant {
  Matrix stretch;
};

// A = diag(exp(N(log_mean_k, log_sd_k^2))).
struct DiagonalLogNormal {
  Vector log_mean;
  Vector log_sd;
};

// A = R * B with B drawn from the atoms and R a rotation by a fixed angle in
// a uniformly random 2-plane.
struct Perturbed {
  std::vector<Atom> atoms;
  double angle = 0.0;
};

using EnsembleKind = std::variant<FiniteSupport, RotationInvariant, DiagonalLogNormal, Perturbed>;

struct EnsembleSpec {
  std::string name;
  int dim = 0;
  EnsembleKind kind;
};

std::string kind_name(const EnsembleSpec& spec);

struct ValidationReport {
  std::string name;
  bool valid = true;
  std::vector<std::string> reasons;
  // E|log sigma_i(A)| and its Monte Carlo standard error (zero for finite
  // support, where the expectation is exact).
  Vector mean_abs_log_sigma;
  Vector stderr_abs_log_sigma;
  // E log|det A|, exact for finite support.
  double mean_log_det = 0.0;
  bool exact = true;
};

// Throws Error(InvalidSpec) listing every violated condition.
ValidationReport validate(const EnsembleSpec& spec);

// Draw number `index` of the stream. Pure function of (spec, sampler, index).
LinearMap sample(const EnsembleSpec& spec, const SeededSampler& sampler, std::uint64_t index);

// log sigma_1 >= ... >= log sigma_d.
Vector log_singular_values(const LinearMap& a);

// Haar-distributed element of SO(d).
Matrix haar_rotation(int d, CounterRng& rng);

// Rotation by `angle` in a uniformly random oriented 2-plane.
Matrix random_plane_rotation(int d, double angle, CounterRng& rng);

// Planar rotation by angle t.
Matrix rotation2(double t);

// Named benchmark ensembles:
//   rot2      Haar SO(2) (invariant control, kappa = 0)
//   bern2     two hyperbolic SL2 atoms, p = 1/2 each
//   diag3eps  d = 3 diagonal atom perturbed by random rotations
//   diag2     deterministic diag(2, 1)
//   hyp2      deterministic symmetric hyperbolic SL2 atom
// Throws InvalidSpec for unknown names.
EnsembleSpec benchmark_ensemble(const std::string& name);
std::vector<std::string> benchmark_names();

// Single-atom ensemble.
EnsembleSpec deterministic_ensemble(const Matrix& m, std::string name = "deterministic");

// Multiplies every matrix of the ensemble by c > 0.
EnsembleSpec scaled_ensemble(const EnsembleSpec& spec, double c);

}  // namespace fibdim
