#include "fibdim/circle_measure.hpp"
#include "fibdim/error.hpp"
#include "fibdim/stats.hpp"

#include <cmath>

namespace fibdim {

std::vector<double> geometric_radii(double r_max, double ratio, int levels) {
  if (!(r_max > 0.0) || !(ratio > 1.0) || levels < 1) {
    throw Error(ErrorKind::InvalidArgument, "geometric_radii: need r_max > 0, ratio > 1, levels >= 1");
  }
  std::vector<double> radii;
  for (int k = 0; k < levels; ++k) radii.push_back(r_max * std::pow(ratio, -k));
  return radii;
}

DimensionEstimate local_dimension(const EmpiricalCircleMeasure& m, FiberCoordinate x,
                                  const std::vector<double>& r_grid, std::optional<double> mass_floor) {
  if (r_grid.size() < 8) throw Error(ErrorKind::InvalidArgument, "local_dimension: radius grid needs at least 8 levels");
  for (double r : r_grid) {
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "local_dimension: radii must be positive");
  }
  const double ratio = r_grid[0] / r_grid[1];
  for (std::size_t k = 1; k < r_grid.size(); ++k) {
    if (std::fabs(r_grid[k - 1] / r_grid[k] - ratio) > 1e-9 * ratio || !(ratio > 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "local_dimension: radius grid must be geometric and decreasing");
    }
  }
  const double floor = mass_floor.value_or(10.0 / static_cast<double>(m.size()));
  DimensionEstimate est;
  est.point = x;
  std::vector<double> lr;
  std::vector<double> lm;
  for (double r : r_grid) {
    const double mass = m.ball_mass(x, r);
    est.radii.push_back(r);
    est.masses.push_back(mass);
    if (mass > floor) {
      lr.push_back(std::log(r));
      lm.push_back(std::log(mass));
    } else {
      est.mass_floor_hit = true;
    }
  }
  est.levels_used = lr.size();
  if (lr.size() < 4) {
    throw Error(ErrorKind::InsufficientMass,
                "local_dimension: only " + std::to_string(lr.size()) + " radius levels above the mass floor");
  }
  const LinearFit fit = fit_line(lr, lm);
  est.slope = fit.slope;
  est.intercept = fit.intercept;
  est.r_max = std::exp(*std::max_element(lr.begin(), lr.end()));
  est.r_min = std::exp(*std::min_element(lr.begin(), lr.end()));
  double ss = 0.0;
  for (std::size_t k = 0; k < lr.size(); ++k) {
    const double e = lm[k] - (fit.intercept + fit.slope * lr[k]);
    ss += e * e;
  }
  est.residual = std::sqrt(ss / static_cast<double>(lr.size()));
  return est;
}

}  // namespace fibdim
