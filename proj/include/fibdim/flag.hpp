#pragma once

// Linear algebra of complete flags in R^d and of the one-dimensional fibers
// obtained by forgetting a single subspace.
//
// Conventions:
//  * A flag is stored as an orthonormal d x d matrix whose first i columns
//    span S_i.
//  * Fiber indices i are 1-based as in S_1 ... S_{d-1}; column indices are
//    0-based, so S_i / S_{i-1} is spanned by column i-1.
//  * The fiber over a partial flag is parametrized by an angle in [0, pi).
//    Distances are min(|a-b|, pi-|a-b|), i.e. the projective angle, which is
//    arc length on the unit circle scaled by one half.

#include <Eigen/Dense>

#include <numbers>
#include <vector>

namespace fibdim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double kOrthonormalTol = 1e-10;
inline constexpr double kConditionCap = 1e12;

// Reduces an angle to [0, pi).
double wrap_angle(double theta);

// Position on a fiber circle.
struct FiberCoordinate {
  double theta = 0.0;

  FiberCoordinate() = default;
  explicit FiberCoordinate(double t) : theta(wrap_angle(t)) {}
};

// Half-scaled arc length between two fiber coordinates, in [0, pi/2].
double circle_distance(double a, double b);
inline double circle_distance(FiberCoordinate a, FiberCoordinate b) {
  return circle_distance(a.theta, b.theta);
}

// Signed counter-clockwise displacement from a to b, in (-pi/2, pi/2].
double circle_offset(double a, double b);

// An invertible linear self-map of R^d.
class LinearMap {
 public:
  // Throws DegenerateBasis when the condition number exceeds cond_cap.
  explicit LinearMap(Matrix m, double cond_cap = kConditionCap);

  // For matrices that are invertible by construction (products of validated
  // atoms and rotations). Skips the SVD.
  static LinearMap trusted(Matrix m);

  const Matrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  LinearMap operator*(const LinearMap& rhs) const;
  LinearMap inverse() const;

 private:
  struct TrustedTag {};
  LinearMap(Matrix m, TrustedTag) : m_(std::move(m)) {}
  Matrix m_;
};

class Flag {
 public:
  // Requires an orthonormal basis (tolerance kOrthonormalTol).
  explicit Flag(Matrix basis);

  static Flag standard(int d);
  // Orthonormalizes an arbitrary basis; leading spans are preserved.
  static Flag from_columns(const Matrix& columns);

  int dim() const { return static_cast<int>(basis_.rows()); }
  const Matrix& basis() const { return basis_; }

  // Orthogonal projector onto S_i.
  Matrix projector(int i) const;

 private:
  struct TrustedTag {};
  Flag(Matrix basis, TrustedTag) : basis_(std::move(basis)) {}
  friend Flag act_flag(const LinearMap&, const Flag&);
  friend struct FlagStep;
  friend Flag flag_from_orthonormal(Matrix);
  Matrix basis_;
};

// Wraps a matrix already known to be orthonormal without re-checking.
Flag flag_from_orthonormal(Matrix q);

// How the plane S_{i+1} minus S_{i-1} is given a reference frame.
enum class CompletionRule {
  // Project e_1, e_2, ... onto the plane, keep the first two independent
  // directions, orthonormalize, make the first nonzero component positive.
  Standard,
  // The standard frame rotated by kRotatedCompletionAngle inside the plane.
  Rotated,
};

inline constexpr double kRotatedCompletionAngle = 0.7;

// A flag with its i-dimensional subspace forgotten. Columns i-1 and i of the
// basis are the deterministic frame (u, v) of the fiber plane.
class PartialFlag {
 public:
  static PartialFlag of(const Flag& f, int i,
                        CompletionRule rule = CompletionRule::Standard);

  int dim() const { return static_cast<int>(basis_.rows()); }
  int missing() const { return missing_; }
  CompletionRule rule() const { return rule_; }
  const Matrix& basis() const { return basis_; }

  Eigen::VectorXd u() const { return basis_.col(missing_ - 1); }
  Eigen::VectorXd v() const { return basis_.col(missing_); }

  // Fiber coordinate of a direction lying (approximately) in the fiber
  // plane. Components outside the plane are discarded.
  FiberCoordinate coordinate_of(const Eigen::Ref<const Vector>& w) const;

  // Projector onto S_j for j != missing().
  Matrix projector(int j) const;

 private:
  PartialFlag(Matrix basis, int missing, CompletionRule rule)
      : basis_(std::move(basis)), missing_(missing), rule_(rule) {}
  Matrix basis_;
  int missing_;
  CompletionRule rule_;
};

// Gram-Schmidt with positive triangular diagonal. Throws DegenerateBasis when
// a leading block is numerically singular.
Matrix orthonormalize(const Matrix& basis);

Flag act_flag(const LinearMap& a, const Flag& f);

// |det_{S_i}(A)|, the Jacobian of A restricted to S_i. Equals 1 for i = 0.
double det_on_subspace(const LinearMap& a, const Flag& f, int i);

// log |det_{S_i}(A)| for i = 0..d from a single QR of A * basis.
Vector log_subspace_dets(const LinearMap& a, const Flag& f);

// Radon-Nikodym derivative d(A eta_{F_i}) / d eta_{AF_i} evaluated at AF:
// |det_{S_i}|^2 / (|det_{S_{i-1}}| |det_{S_{i+1}}|).
double flag_jacobian(const LinearMap& a, const Flag& f, int i);

// One cocycle step: the image flag and the log subspace determinants.
struct FlagStep {
  Flag image;
  Vector log_dets;  // size d + 1, entry 0 is 0

  static FlagStep apply(const LinearMap& a, const Flag& f);
};

Flag fiber_embed(const PartialFlag& fi, FiberCoordinate theta);
FiberCoordinate fiber_coordinate(const Flag& f, int i,
                                 CompletionRule rule = CompletionRule::Standard);

// Angle between the lines spanned by u and v, in [0, pi/2].
double angle_between_lines(const Vector& u, const Vector& v);

}  // namespace fibdim
