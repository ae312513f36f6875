#pragma once

#include "fibdim/flag.hpp"

namespace fibdim {

// The diffeomorphism between fiber circles induced by a linear map. It is
// represented by the 2x2 matrix of the quotient map
//   S_{i+1}/S_{i-1}  ->  A S_{i+1} / A S_{i-1}
// in the (u, v) frames of the source and target partial flags. A fiber
// coordinate theta is the line through (cos theta, sin theta).
class CircleMap {
 public:
  CircleMap(const LinearMap& a, const PartialFlag& source);
  // From an explicit quotient matrix (used for compositions and inverses).
  explicit CircleMap(const Eigen::Matrix2d& quotient) : t_(quotient) {}

  const Eigen::Matrix2d& quotient() const { return t_; }

  FiberCoordinate operator()(FiberCoordinate theta) const;

  // Metric derivative |dT/dtheta| = |det T| / |T w|^2 with w the unit vector
  // at theta.
  double derivative(FiberCoordinate theta) const;

  // Radon-Nikodym derivative d(T eta)/d eta at T(theta); the reciprocal of
  // derivative(theta). Equals flag_jacobian of the completed flag.
  double jacobian(FiberCoordinate theta) const { return 1.0 / derivative(theta); }

  bool preserves_orientation() const { return t_.determinant() > 0.0; }

  // Image of a small signed offset delta taken at theta, computed without
  // cancellation: the result keeps full relative precision as delta -> 0.
  // Valid for |delta| < pi.
  double push_offset(FiberCoordinate theta, double delta) const;

  CircleMap inverse() const { return CircleMap(Eigen::Matrix2d(t_.inverse())); }

  // (*this) after rhs.
  CircleMap compose(const CircleMap& rhs) const;

 private:
  Eigen::Matrix2d t_;
};

// Convenience form of the induced map together with its target partial flag.
struct InducedCircleMap {
  CircleMap map;
  PartialFlag target;
};

InducedCircleMap induced_circle_map(const LinearMap& a, const PartialFlag& source);

// Quotient matrix of A between two given partial flags, which must satisfy
// A S_j(source) = S_j(target) for j = i-1, i+1.
Eigen::Matrix2d quotient_matrix(const LinearMap& a, const PartialFlag& source,
                                const PartialFlag& target);

}  // namespace fibdim
