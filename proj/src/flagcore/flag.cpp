#include "fibdim/flag.hpp"

#include "fibdim/error.hpp"

#include <cmath>
#include <sstream>

namespace fibdim {

double wrap_angle(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t = 0.0;
  return t;
}

double circle_distance(double a, double b) {
  const double d = std::fabs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kPi - d);
}

double circle_offset(double a, double b) {
  double d = wrap_angle(b) - wrap_angle(a);
  if (d > kPi / 2) d -= kPi;
  if (d <= -kPi / 2) d += kPi;
  return d;
}

LinearMap::LinearMap(Matrix m, double cond_cap) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) {
    throw Error(ErrorKind::DimensionMismatch, "LinearMap: matrix must be square");
  }
  if (!m_.allFinite()) {
    throw Error(ErrorKind::DegenerateBasis, "LinearMap: non-finite entries");
  }
  Eigen::JacobiSVD<Matrix> svd(m_);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || smax / smin > cond_cap) {
    std::ostringstream os;
    os << "LinearMap: matrix is not invertible (condition "
       << (smin > 0.0 ? smax / smin : INFINITY) << ")";
    throw Error(ErrorKind::DegenerateBasis, os.str());
  }
}

LinearMap LinearMap::trusted(Matrix m) { return LinearMap(std::move(m), TrustedTag{}); }

LinearMap LinearMap::operator*(const LinearMap& rhs) const {
  if (dim() != rhs.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "LinearMap product: dimensions differ");
  }
  return LinearMap(m_ * rhs.m_, TrustedTag{});
}

LinearMap LinearMap::inverse() const { return LinearMap(m_.inverse(), TrustedTag{}); }

namespace {

// Householder QR with the sign of each R_jj made positive. Returns false when
// some R_jj is negligible relative to its column.
bool signed_qr(const Matrix& a, Matrix& q, Vector* log_diag) {
  const Eigen::Index n = a.cols();
  Eigen::HouseholderQR<Matrix> qr(a);
  q = qr.householderQ() * Matrix::Identity(a.rows(), n);
  const Matrix& packed = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double rjj = packed(j, j);
    const double colnorm = a.col(j).norm();
    if (!(colnorm > 0.0) || !(std::fabs(rjj) * kConditionCap > colnorm)) {
      return false;
    }
    if (rjj < 0.0) q.col(j) = -q.col(j);
    if (log_diag) (*log_diag)(j) = std::log(std::fabs(rjj));
  }
  return true;
}

void check_index(int d, int i, int lo, int hi, const char* who) {
  if (i < lo || i > hi) {
    std::ostringstream os;
    os << who << ": index " << i << " outside [" << lo << ", " << hi << "] for d=" << d;
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
}

}  // namespace

Matrix orthonormalize(const Matrix& basis) {
  if (basis.rows() != basis.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "orthonormalize: matrix must be square");
  }
  Matrix q;
  if (!basis.allFinite() || !signed_qr(basis, q, nullptr)) {
    throw Error(ErrorKind::DegenerateBasis,
                "orthonormalize: a leading block is numerically singular");
  }
  return q;
}

Flag::Flag(Matrix basis) : basis_(std::move(basis)) {
  if (basis_.rows() != basis_.cols() || basis_.rows() < 2) {
    throw Error(ErrorKind::DimensionMismatch, "Flag: basis must be square with d >= 2");
  }
  const Matrix gram = basis_.transpose() * basis_;
  const double err = (gram - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
  if (!(err < kOrthonormalTol)) {
    throw Error(ErrorKind::DegenerateBasis, "Flag: basis is not orthonormal");
  }
}

Flag Flag::standard(int d) { return Flag(Matrix::Identity(d, d)); }

Flag Flag::from_columns(const Matrix& columns) {
  return Flag(orthonormalize(columns), TrustedTag{});
}

Flag flag_from_orthonormal(Matrix q) { return Flag(std::move(q), Flag::TrustedTag{}); }

Matrix Flag::projector(int i) const {
  check_index(dim(), i, 0, dim(), "Flag::projector");
  const auto b = basis_.leftCols(i);
  return b * b.transpose();
}

Flag act_flag(const LinearMap& a, const Flag& f) { return FlagStep::apply(a, f).image; }

FlagStep FlagStep::apply(const LinearMap& a, const Flag& f) {
  if (a.dim() != f.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "act_flag: dimensions differ");
  }
  const int d = f.dim();
  Matrix q;
  Vector ld(d);
  if (!signed_qr(a.matrix() * f.basis(), q, &ld)) {
    throw Error(ErrorKind::DegenerateBasis, "act_flag: image basis is numerically singular");
  }
  Vector cum(d + 1);
  cum(0) = 0.0;
  for (int j = 0; j < d; ++j) cum(j + 1) = cum(j) + ld(j);
  return FlagStep{Flag(std::move(q), Flag::TrustedTag{}), std::move(cum)};
}

Vector log_subspace_dets(const LinearMap& a, const Flag& f) {
  return FlagStep::apply(a, f).log_dets;
}

double det_on_subspace(const LinearMap& a, const Flag& f, int i) {
  check_index(f.dim(), i, 0, f.dim(), "det_on_subspace");
  if (i == 0) return 1.0;
  return std::exp(log_subspace_dets(a, f)(i));
}

double flag_jacobian(const LinearMap& a, const Flag& f, int i) {
  check_index(f.dim(), i, 1, f.dim() - 1, "flag_jacobian");
  const Vector ld = log_subspace_dets(a, f);
  return std::exp(2.0 * ld(i) - ld(i - 1) - ld(i + 1));
}

namespace {

void canonical_sign(Vector& w) {
  const double scale = w.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (std::fabs(w(k)) > 1e-9 * scale) {
      if (w(k) < 0.0) w = -w;
      return;
    }
  }
}

}  // namespace

PartialFlag PartialFlag::of(const Flag& f, int i, CompletionRule rule) {
  const int d = f.dim();
  check_index(d, i, 1, d - 1, "PartialFlag::of");
  const auto plane = f.basis().middleCols(i - 1, 2);
  constexpr double kTol = 1e-6;

  Vector u, v;
  int k = 0;
  for (; k < d; ++k) {
    Vector p = plane * plane.row(k).transpose();
    const double n = p.norm();
    if (n > kTol) {
      u = p / n;
      break;
    }
  }
  for (++k; k < d; ++k) {
    Vector p = plane * plane.row(k).transpose();
    p -= u.dot(p) * u;
    const double n = p.norm();
    if (n > kTol) {
      v = p / n;
      break;
    }
  }
  if (u.size() == 0 || v.size() == 0) {
    throw Error(ErrorKind::DegenerateBasis, "PartialFlag: completion rule failed");
  }
  canonical_sign(u);
  canonical_sign(v);
  if (rule == CompletionRule::Rotated) {
    const double c = std::cos(kRotatedCompletionAngle);
    const double s = std::sin(kRotatedCompletionAngle);
    Vector ru = c * u + s * v;
    Vector rv = -s * u + c * v;
    u = std::move(ru);
    v = std::move(rv);
  }
  Matrix basis = f.basis();
  basis.col(i - 1) = u;
  basis.col(i) = v;
  return PartialFlag(std::move(basis), i, rule);
}

FiberCoordinate PartialFlag::coordinate_of(const Eigen::Ref<const Vector>& w) const {
  const double a = basis_.col(missing_ - 1).dot(w);
  const double b = basis_.col(missing_).dot(w);
  return FiberCoordinate(std::atan2(b, a));
}

Matrix PartialFlag::projector(int j) const {
  check_index(dim(), j, 0, dim(), "PartialFlag::projector");
  if (j == missing_) {
    throw Error(ErrorKind::InvalidArgument, "PartialFlag::projector: subspace is forgotten");
  }
  const auto b = basis_.leftCols(j);
  return b * b.transpose();
}

Flag fiber_embed(const PartialFlag& fi, FiberCoordinate theta) {
  const int i = fi.missing();
  const double c = std::cos(theta.theta);
  const double s = std::sin(theta.theta);
  Matrix basis = fi.basis();
  basis.col(i - 1) = c * fi.basis().col(i - 1) + s * fi.basis().col(i);
  basis.col(i) = -s * fi.basis().col(i - 1) + c * fi.basis().col(i);
  return flag_from_orthonormal(std::move(basis));
}

FiberCoordinate fiber_coordinate(const Flag& f, int i, CompletionRule rule) {
  return PartialFlag::of(f, i, rule).coordinate_of(f.basis().col(i - 1));
}

double angle_between_lines(const Vector& u, const Vector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) {
    throw Error(ErrorKind::ZeroVector, "angle_between_lines: zero vector");
  }
  if (u.size() != v.size()) {
    throw Error(ErrorKind::DimensionMismatch, "angle_between_lines: sizes differ");
  }
  // atan2 form stays accurate for nearly parallel lines.
  const double dot = std::fabs(u.dot(v));
  const Vector perp = v - (u.dot(v) / (nu * nu)) * u;
  return std::atan2(perp.norm() * nu, dot);
}

}  // namespace fibdim
