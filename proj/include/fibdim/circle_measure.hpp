#pragma once

#include "fibdim/flag.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fibdim {

// Finitely supported probability on the fiber circle [0, pi). Points are
// kept sorted; queries use binary search over cumulative weights.
class EmpiricalCircleMeasure {
 public:
  // Equal weights 1/n. Angles are wrapped into [0, pi).
  explicit EmpiricalCircleMeasure(std::vector<double> thetas);
  // Weights must be positive and sum to 1 within 1e-12.
  EmpiricalCircleMeasure(std::vector<double> thetas, std::vector<double> weights);

  std::size_t size() const { return points_.size(); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  bool uniform_weights() const { return uniform_; }

  // Mass of the closed arc running counter-clockwise from `start` over
  // `length` (length in [0, pi]).
  double arc_mass(double start, double length) const;
  // Number of points in that closed arc.
  std::size_t arc_count(double start, double length) const;

  // Mass of the closed ball of radius r around x. Equals 1 for r >= pi/2.
  double ball_mass(FiberCoordinate x, double r) const;

  // Weighted sums over the closed arc from `start` of `length`:
  // (sum w, sum w * (theta - start)) with theta unwrapped past start.
  std::pair<double, double> arc_moments(double start, double length) const;

  // sum_j w_j max(0, 1 - dist(x, p_j) / h) for h in (0, pi/2]. A point at x
  // has weight exactly 1.
  double triangular_kernel_sum(FiberCoordinate x, double h) const;

 private:
  void build();
  // Index range [lo, hi) into the tripled point list covering the arc.
  std::pair<std::size_t, std::size_t> arc_range(double start, double length) const;

  std::vector<double> points_;
  std::vector<double> weights_;
  bool uniform_ = false;
  // Points shifted by -pi, 0, +pi and prefix sums of w and w * theta.
  std::vector<double> ext_points_;
  std::vector<double> ext_cum_w_;
  std::vector<double> ext_cum_wt_;
};

// Largest mass of a closed arc of length eps (window starting at a sample
// point).
double max_cluster_weight(const EmpiricalCircleMeasure& m, double eps);

struct NonatomicityReport {
  std::vector<std::size_t> sizes;
  std::vector<double> max_cluster;
  double eps = 0.0;
  bool decreasing = false;  // non-increasing with an overall decrease
};

// Max eps-cluster weight for each measure of a nested sequence of samples.
NonatomicityReport nonatomicity_diagnostic(const std::vector<EmpiricalCircleMeasure>& samples,
                                           double eps);

// Supremum over arcs with endpoints at sample points that contain x of the
// m-average of f; f holds one value per point (in the measure's order).
// O(n^2). Arcs of zero mass are not considered.
double maximal_function(const std::vector<double>& f, const EmpiricalCircleMeasure& m, FiberCoordinate x);

// Circular Wasserstein-1 distance in the half-scaled metric:
// min over c of the integral of |F1 - F2 - c|.
double circular_wasserstein1(const EmpiricalCircleMeasure& a, const EmpiricalCircleMeasure& b);

// CSV with columns theta, weight.
void write_measure_csv(const EmpiricalCircleMeasure& m, const std::string& path);
EmpiricalCircleMeasure read_measure_csv(const std::string& path);

struct DimensionEstimate {
  FiberCoordinate point;
  double slope = 0.0;
  double intercept = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double residual = 0.0;  // RMS residual of the log-log fit
  bool mass_floor_hit = false;
  std::size_t levels_used = 0;
  std::vector<double> radii;   // all grid radii
  std::vector<double> masses;  // ball masses at those radii
};

// r_max * ratio^-k for k = 0 .. levels-1.
std::vector<double> geometric_radii(double r_max = kPi / 8, double ratio = 2.0, int levels = 12);

// Log-log least squares of ball mass against radius over the grid levels
// whose mass exceeds the floor (default 10/n). The grid must be geometric
// with at least 8 levels. Throws InsufficientMass with fewer than 4 usable
// levels.
DimensionEstimate local_dimension(const EmpiricalCircleMeasure& m, FiberCoordinate x,
                                  const std::vector<double>& r_grid,
                                  std::optional<double> mass_floor = std::nullopt);

// Wrapped triangular kernel density estimate, density with respect to
// d theta on [0, pi): (1/h) sum_j w_j max(0, 1 - dist(theta, p_j)/h).
// Keeps a reference: the measure must outlive the estimator.
class CircularKde {
 public:
  CircularKde(const EmpiricalCircleMeasure& m, double bandwidth);

  double bandwidth() const { return h_; }
  double density(FiberCoordinate t) const;
  // Number of sample points in the closed kernel window.
  std::size_t local_count(FiberCoordinate t) const;

 private:
  const EmpiricalCircleMeasure* m_;
  double h_;
};

// Ratio of kernel density estimates of m1 and m2 with a shared bandwidth.
// Both measures must outlive the ratio.
class DensityRatio {
 public:
  static constexpr std::size_t kMinLocalCount = 5;

  DensityRatio(const EmpiricalCircleMeasure& m1, const EmpiricalCircleMeasure& m2, double bandwidth);

  // Throws BandwidthTooSmall when m2 has fewer than 5 points in the window.
  double operator()(FiberCoordinate t) const;
  // Empty instead of throwing.
  std::optional<double> try_at(FiberCoordinate t) const;

 private:
  CircularKde k1_;
  CircularKde k2_;
  bool identical_;
};

}  // namespace fibdim
