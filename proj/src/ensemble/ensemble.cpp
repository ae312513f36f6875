#include "fibdim/ensemble.hpp"

#include "fibdim/error.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace fibdim {

namespace {

constexpr double kProbabilityTol = 1e-12;
constexpr std::uint64_t kValidationDraws = 20000;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_matrix(const Matrix& m, int d, const std::string& what,
                  std::vector<std::string>& reasons) {
  if (m.rows() != d || m.cols() != d) {
    std::ostringstream os;
    os << what << " has shape " << m.rows() << "x" << m.cols() << ", expected " << d << "x" << d;
    reasons.push_back(os.str());
    return;
  }
  if (!m.allFinite()) {
    reasons.push_back(what + " has non-finite entries");
    return;
  }
  const Eigen::JacobiSVD<Matrix> svd(m);
  const Vector s = svd.singularValues();
  if (s(d - 1) <= 0.0 || s(0) > kConditionCap * s(d - 1)) {
    reasons.push_back(what + " is singular or ill-conditioned");
  }
}

void check_atoms(const std::vector<Atom>& atoms, int d, std::vector<std::string>& reasons) {
  if (atoms.empty()) {
    reasons.push_back("ensemble has no atoms");
    return;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double p = atoms[k].probability;
    if (!(p > 0.0) || !std::isfinite(p)) {
      reasons.push_back("atom " + std::to_string(k) + " has invalid probability");
    }
    total += p;
    check_matrix(atoms[k].matrix, d, "atom " + std::to_string(k), reasons);
  }
  if (std::fabs(total - 1.0) > kProbabilityTol * static_cast<double>(atoms.size())) {
    std::ostringstream os;
    os.precision(17);
    os << "atom probabilities sum to " << total << ", expected 1";
    reasons.push_back(os.str());
  }
}

std::size_t pick_atom(const std::vector<Atom>& atoms, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    acc += atoms[k].probability;
    if (u < acc) return k;
  }
  // Rounding in the cumulative sum: fall back to the last atom with mass.
  for (std::size_t k = atoms.size(); k-- > 0;) {
    if (atoms[k].probability > 0.0) return k;
  }
  return atoms.size() - 1;
}

Matrix unit_gaussian(int d, CounterRng& rng) {
  Matrix g(d, 1);
  for (int k = 0; k < d; ++k) g(k, 0) = rng.normal();
  return g;
}

}  // namespace

std::string kind_name(const EnsembleSpec& spec) {
  return std::visit(Overloaded{
                        [](const FiniteSupport&) { return std::string("finite_support"); },
                        [](const RotationInvariant&) { return std::string("rotation_invariant"); },
                        [](const DiagonalLogNormal&) { return std::string("diagonal"); },
                        [](const Perturbed&) { return std::string("perturbed"); },
                    },
                    spec.kind);
}

Matrix rotation2(double t) {
  Matrix r(2, 2);
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Matrix haar_rotation(int d, CounterRng& rng) {
  if (d == 2) return rotation2(2.0 * kPi * rng.uniform());
  Matrix g(d, d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign convention R_jj > 0 makes Q Haar on O(d).
  for (int j = 0; j < d; ++j) {
    if (rr(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

Matrix random_plane_rotation(int d, double angle, CounterRng& rng) {
  Vector u = unit_gaussian(d, rng).col(0);
  Vector w = unit_gaussian(d, rng).col(0);
  u.normalize();
  w -= u.dot(w) * u;
  w.normalize();
  Matrix r = Matrix::Identity(d, d);
  r += (std::cos(angle) - 1.0) * (u * u.transpose() + w * w.transpose());
  r += std::sin(angle) * (w * u.transpose() - u * w.transpose());
  return r;
}

LinearMap sample(const EnsembleSpec& spec, const SeededSampler& sampler, std::uint64_t index) {
  CounterRng rng(sampler, index);
  const int d = spec.dim;
  return std::visit(
      Overloaded{
          [&](const FiniteSupport& fs) {
            return LinearMap::trusted(fs.atoms[pick_atom(fs.atoms, rng)].matrix);
          },
          [&](const RotationInvariant& ri) {
            return LinearMap::trusted(haar_rotation(d, rng) * ri.stretch);
          },
          [&](const DiagonalLogNormal& dl) {
            Matrix m = Matrix::Zero(d, d);
            for (int k = 0; k < d; ++k) m(k, k) = std::exp(dl.log_mean(k) + dl.log_sd(k) * rng.normal());
            return LinearMap::trusted(std::move(m));
          },
          [&](const Perturbed& pt) {
            const Matrix& b = pt.atoms[pick_atom(pt.atoms, rng)].matrix;
            return LinearMap::trusted(random_plane_rotation(d, pt.angle, rng) * b);
          },
      },
      spec.kind);
}

Vector log_singular_values(const LinearMap& a) {
  const Eigen::JacobiSVD<Matrix> svd(a.matrix());
  return svd.singularValues().array().log().matrix();
}

ValidationReport validate(const EnsembleSpec& spec) {
  ValidationReport rep;
  rep.name = spec.name;
  const int d = spec.dim;
  if (d < 2) {
    throw Error(ErrorKind::InvalidSpec,
                "ensemble '" + spec.name + "': dimension must be at least 2");
  }
  std::vector<std::string>& reasons = rep.reasons;
  std::visit(Overloaded{
                 [&](const FiniteSupport& fs) { check_atoms(fs.atoms, d, reasons); },
                 [&](const RotationInvariant& ri) { check_matrix(ri.stretch, d, "stretch", reasons); },
                 [&](const DiagonalLogNormal& dl) {
                   if (dl.log_mean.size() != d || dl.log_sd.size() != d) {
                     reasons.push_back("diagonal parameters must have length " + std::to_string(d));
                     return;
                   }
                   if (!dl.log_mean.allFinite() || !dl.log_sd.allFinite() ||
                       (dl.log_sd.array() < 0.0).any()) {
                     reasons.push_back("diagonal parameters must be finite with log_sd >= 0");
                   }
                 },
                 [&](const Perturbed& pt) {
                   check_atoms(pt.atoms, d, reasons);
                   if (!std::isfinite(pt.angle)) reasons.push_back("perturbation angle is not finite");
                 },
             },
             spec.kind);
  if (!reasons.empty()) {
    std::string msg = "ensemble '" + spec.name + "' is invalid:";
    for (const auto& r : reasons) msg += "\n  " + r;
    throw Error(ErrorKind::InvalidSpec, msg);
  }

  rep.mean_abs_log_sigma = Vector::Zero(d);
  rep.stderr_abs_log_sigma = Vector::Zero(d);
  if (const auto* fs = std::get_if<FiniteSupport>(&spec.kind)) {
    for (const Atom& a : fs->atoms) {
      const Vector ls = log_singular_values(LinearMap::trusted(a.matrix));
      rep.mean_abs_log_sigma += a.probability * ls.cwiseAbs();
      rep.mean_log_det += a.probability * ls.sum();
    }
    return rep;
  }

  // Moment condition by Monte Carlo on a fixed stream.
  rep.exact = false;
  const SeededSampler probe{0x5eed, 0};
  Vector sum = Vector::Zero(d);
  Vector sum_sq = Vector::Zero(d);
  double det_sum = 0.0;
  for (std::uint64_t n = 0; n < kValidationDraws; ++n) {
    const Vector ls = log_singular_values(sample(spec, probe, n));
    const Vector a = ls.cwiseAbs();
    sum += a;
    sum_sq += a.cwiseProduct(a);
    det_sum += ls.sum();
  }
  const double nd = static_cast<double>(kValidationDraws);
  rep.mean_abs_log_sigma = sum / nd;
  const Vector var = (sum_sq / nd - rep.mean_abs_log_sigma.cwiseProduct(rep.mean_abs_log_sigma))
                         .cwiseMax(0.0);
  rep.stderr_abs_log_sigma = (var / nd).cwiseSqrt();
  rep.mean_log_det = det_sum / nd;
  if (!rep.mean_abs_log_sigma.allFinite()) {
    throw Error(ErrorKind::InvalidSpec,
                "ensemble '" + spec.name + "': E|log sigma| is not finite");
  }
  return rep;
}

EnsembleSpec deterministic_ensemble(const Matrix& m, std::string name) {
  return EnsembleSpec{std::move(name), static_cast<int>(m.rows()),
                      FiniteSupport{{Atom{m, 1.0}}}};
}

EnsembleSpec scaled_ensemble(const EnsembleSpec& spec, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw Error(ErrorKind::InvalidArgument, "scaled_ensemble: factor must be positive");
  }
  EnsembleSpec out = spec;
  std::visit(Overloaded{
                 [&](FiniteSupport& fs) {
                   for (Atom& a : fs.atoms) a.matrix *= c;
                 },
                 [&](RotationInvariant& ri) { ri.stretch *= c; },
                 [&](DiagonalLogNormal& dl) { dl.log_mean.array() += std::log(c); },
                 [&](Perturbed& pt) {
                   for (Atom& a : pt.atoms) a.matrix *= c;
                 },
             },
             out.kind);
  return out;
}

std::vector<std::string> benchmark_names() { return {"rot2", "bern2", "diag3eps", "diag2", "hyp2"}; }

EnsembleSpec benchmark_ensemble(const std::string& name) {
  if (name == "rot2") return EnsembleSpec{name, 2, RotationInvariant{Matrix::Identity(2, 2)}};
  if (name == "bern2") {
    Matrix core = Matrix::Zero(2, 2);
    core(0, 0) = 2.5;
    core(1, 1) = 1.0 / 2.5;
    const double t = 0.4;
    return EnsembleSpec{name, 2,
                        FiniteSupport{{Atom{rotation2(t) * core * rotation2(-t), 0.5},
                                       Atom{rotation2(-t) * core * rotation2(t), 0.5}}}};
  }
  if (name == "diag3eps") {
    Matrix core = Matrix::Zero(3, 3);
    core(0, 0) = std::exp(0.6);
    core(1, 1) = std::exp(0.1);
    core(2, 2) = std::exp(-0.4);
    return EnsembleSpec{name, 3, Perturbed{{Atom{core, 1.0}}, 0.8}};
  }
  if (name == "diag2") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = 1.0;
    return deterministic_ensemble(m, name);
  }
  if (name == "hyp2") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = 0.5;
    return deterministic_ensemble(m, name);
  }
  throw Error(ErrorKind::InvalidSpec, "unknown benchmark ensemble '" + name + "'");
}

}  // namespace fibdim
