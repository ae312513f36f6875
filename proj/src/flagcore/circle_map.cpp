#include "fibdim/circle_map.hpp"

#include "fibdim/error.hpp"

#include <cmath>

namespace fibdim {

Eigen::Matrix2d quotient_matrix(const LinearMap& a, const PartialFlag& source,
                                const PartialFlag& target) {
  if (a.dim() != source.dim() || a.dim() != target.dim() ||
      source.missing() != target.missing()) {
    throw Error(ErrorKind::DimensionMismatch, "quotient_matrix: incompatible partial flags");
  }
  const int i = source.missing();
  const Matrix image = a.matrix() * source.basis().middleCols(i - 1, 2);
  return target.basis().middleCols(i - 1, 2).transpose() * image;
}

InducedCircleMap induced_circle_map(const LinearMap& a, const PartialFlag& source) {
  const Flag image = act_flag(a, fiber_embed(source, FiberCoordinate(0.0)));
  PartialFlag target = PartialFlag::of(image, source.missing(), source.rule());
  CircleMap map(quotient_matrix(a, source, target));
  return InducedCircleMap{std::move(map), std::move(target)};
}

CircleMap::CircleMap(const LinearMap& a, const PartialFlag& source)
    : t_(induced_circle_map(a, source).map.quotient()) {}

FiberCoordinate CircleMap::operator()(FiberCoordinate theta) const {
  const Eigen::Vector2d w(std::cos(theta.theta), std::sin(theta.theta));
  const Eigen::Vector2d p = t_ * w;
  return FiberCoordinate(std::atan2(p(1), p(0)));
}

double CircleMap::derivative(FiberCoordinate theta) const {
  const Eigen::Vector2d w(std::cos(theta.theta), std::sin(theta.theta));
  return std::fabs(t_.determinant()) / (t_ * w).squaredNorm();
}

double CircleMap::push_offset(FiberCoordinate theta, double delta) const {
  const Eigen::Vector2d w1(std::cos(theta.theta), std::sin(theta.theta));
  const Eigen::Vector2d w2(std::cos(theta.theta + delta), std::sin(theta.theta + delta));
  const Eigen::Vector2d p = t_ * w1;
  const Eigen::Vector2d q = t_ * w2;
  return std::atan2(t_.determinant() * std::sin(delta), p.dot(q));
}

CircleMap CircleMap::compose(const CircleMap& rhs) const {
  Eigen::Matrix2d prod = t_ * rhs.t_;
  // Rescaling leaves the projective action unchanged and avoids overflow.
  const double s = prod.cwiseAbs().maxCoeff();
  if (s > 0.0) prod /= s;
  return CircleMap(prod);
}

}  // namespace fibdim
