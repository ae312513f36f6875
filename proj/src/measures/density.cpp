#include "fibdim/circle_measure.hpp"
#include "fibdim/error.hpp"

#include <cmath>

namespace fibdim {

CircularKde::CircularKde(const EmpiricalCircleMeasure& m, double bandwidth) : m_(&m), h_(bandwidth) {
  if (!(bandwidth > 0.0) || bandwidth >= 0.5 * kPi) {
    throw Error(ErrorKind::InvalidArgument, "kernel bandwidth must lie in (0, pi/2)");
  }
}

double CircularKde::density(FiberCoordinate t) const {
  return m_->triangular_kernel_sum(t, h_) / h_;
}

std::size_t CircularKde::local_count(FiberCoordinate t) const {
  return m_->arc_count(t.theta - h_, 2.0 * h_);
}

DensityRatio::DensityRatio(const EmpiricalCircleMeasure& m1, const EmpiricalCircleMeasure& m2, double bandwidth)
    : k1_(m1, bandwidth),
      k2_(m2, bandwidth),
      identical_(&m1 == &m2 || (m1.points() == m2.points() && m1.weights() == m2.weights())) {}

std::optional<double> DensityRatio::try_at(FiberCoordinate t) const {
  if (k2_.local_count(t) < kMinLocalCount) return std::nullopt;
  if (identical_) return 1.0;
  const double denom = k2_.density(t);
  if (!(denom > 0.0)) return std::nullopt;
  return k1_.density(t) / denom;
}

double DensityRatio::operator()(FiberCoordinate t) const {
  const auto r = try_at(t);
  if (!r) {
    throw Error(ErrorKind::BandwidthTooSmall,
                "density ratio: fewer than " + std::to_string(kMinLocalCount) + " reference points within the bandwidth");
  }
  return *r;
}

}  // namespace fibdim
