#include "fibdim/circle_measure.hpp"

#include "fibdim/csv.hpp"
#include "fibdim/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fibdim {

namespace {
constexpr double kWeightTol = 1e-12;
// Sparse kernel windows are summed directly: prefix-sum differences lose
// about 1e-15 / h in absolute terms.
constexpr std::size_t kDirectKernelPoints = 64;
}

EmpiricalCircleMeasure::EmpiricalCircleMeasure(std::vector<double> thetas) : uniform_(true) {
  if (thetas.empty()) throw Error(ErrorKind::InvalidArgument, "empirical measure needs at least one point");
  points_ = std::move(thetas);
  for (double& t : points_) t = wrap_angle(t);
  std::sort(points_.begin(), points_.end());
  weights_.assign(points_.size(), 1.0 / static_cast<double>(points_.size()));
  build();
}

EmpiricalCircleMeasure::EmpiricalCircleMeasure(std::vector<double> thetas, std::vector<double> weights) {
  if (thetas.empty() || thetas.size() != weights.size()) {
    throw Error(ErrorKind::InvalidArgument, "empirical measure: points and weights must match and be non-empty");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorKind::InvalidArgument, "empirical measure: weights must be positive");
    total += w;
  }
  if (std::fabs(total - 1.0) > kWeightTol * std::max<double>(1.0, std::sqrt(static_cast<double>(weights.size())))) {
    throw Error(ErrorKind::InvalidArgument, "empirical measure: weights must sum to 1");
  }
  std::vector<std::size_t> order(thetas.size());
  std::iota(order.begin(), order.end(), 0);
  for (double& t : thetas) t = wrap_angle(t);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return thetas[a] < thetas[b]; });
  points_.reserve(order.size());
  weights_.reserve(order.size());
  for (std::size_t k : order) {
    points_.push_back(thetas[k]);
    weights_.push_back(weights[k]);
  }
  build();
}

void EmpiricalCircleMeasure::build() {
  const std::size_t n = points_.size();
  ext_points_.reserve(3 * n);
  ext_cum_w_.assign(1, 0.0);
  ext_cum_wt_.assign(1, 0.0);
  ext_cum_w_.reserve(3 * n + 1);
  ext_cum_wt_.reserve(3 * n + 1);
  for (double shift : {-kPi, 0.0, kPi}) {
    for (std::size_t k = 0; k < n; ++k) {
      const double p = points_[k] + shift;
      ext_points_.push_back(p);
      ext_cum_w_.push_back(ext_cum_w_.back() + weights_[k]);
      ext_cum_wt_.push_back(ext_cum_wt_.back() + weights_[k] * p);
    }
  }
}

std::pair<std::size_t, std::size_t> EmpiricalCircleMeasure::arc_range(double start, double length) const {
  const std::size_t n = points_.size();
  if (length >= kPi) return {n, 2 * n};
  const double s = wrap_angle(start);
  const auto lo = std::lower_bound(ext_points_.begin(), ext_points_.end(), s);
  const auto hi = std::upper_bound(ext_points_.begin(), ext_points_.end(), s + std::max(length, 0.0));
  return {static_cast<std::size_t>(lo - ext_points_.begin()), static_cast<std::size_t>(hi - ext_points_.begin())};
}

std::size_t EmpiricalCircleMeasure::arc_count(double start, double length) const {
  const auto [lo, hi] = arc_range(start, length);
  return hi - lo;
}

double EmpiricalCircleMeasure::arc_mass(double start, double length) const {
  const auto [lo, hi] = arc_range(start, length);
  if (uniform_) return static_cast<double>(hi - lo) / static_cast<double>(points_.size());
  return std::clamp(ext_cum_w_[hi] - ext_cum_w_[lo], 0.0, 1.0);
}

double EmpiricalCircleMeasure::ball_mass(FiberCoordinate x, double r) const {
  if (r < 0.0) throw Error(ErrorKind::InvalidArgument, "ball_mass: negative radius");
  if (r >= 0.5 * kPi) return 1.0;
  return arc_mass(x.theta - r, 2.0 * r);
}

std::pair<double, double> EmpiricalCircleMeasure::arc_moments(double start, double length) const {
  const auto [lo, hi] = arc_range(start, length);
  const double s = wrap_angle(start);
  const double w = ext_cum_w_[hi] - ext_cum_w_[lo];
  const double wt = ext_cum_wt_[hi] - ext_cum_wt_[lo];
  return {w, wt - s * w};
}

double EmpiricalCircleMeasure::triangular_kernel_sum(FiberCoordinate x, double h) const {
  // The unshifted copy sits in the middle third, so [x - h, x + h] needs no
  // wrapping.
  const double c = x.theta;
  const auto begin = ext_points_.begin();
  const auto lo = static_cast<std::size_t>(std::lower_bound(begin, ext_points_.end(), c - h) - begin);
  const auto mid = static_cast<std::size_t>(std::upper_bound(begin, ext_points_.end(), c) - begin);
  const auto hi = static_cast<std::size_t>(std::upper_bound(begin, ext_points_.end(), c + h) - begin);
  if (hi - lo <= kDirectKernelPoints) {
    double sum = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      sum += weights_[k % points_.size()] * std::max(0.0, 1.0 - std::fabs(ext_points_[k] - c) / h);
    }
    return sum;
  }
  const double wl = ext_cum_w_[mid] - ext_cum_w_[lo];
  const double tl = ext_cum_wt_[mid] - ext_cum_wt_[lo];
  const double wr = ext_cum_w_[hi] - ext_cum_w_[mid];
  const double tr = ext_cum_wt_[hi] - ext_cum_wt_[mid];
  // Left: (theta - (c - h)) / h; right: 1 - (theta - c) / h.
  const double left = (tl - (c - h) * wl) / h;
  const double right = wr - (tr - c * wr) / h;
  return std::max(left + right, 0.0);
}

double max_cluster_weight(const EmpiricalCircleMeasure& m, double eps) {
  double best = 0.0;
  for (double p : m.points()) best = std::max(best, m.arc_mass(p, eps));
  return best;
}

NonatomicityReport nonatomicity_diagnostic(const std::vector<EmpiricalCircleMeasure>& samples, double eps) {
  NonatomicityReport rep;
  rep.eps = eps;
  for (const auto& m : samples) {
    rep.sizes.push_back(m.size());
    rep.max_cluster.push_back(max_cluster_weight(m, eps));
  }
  bool monotone = true;
  for (std::size_t k = 1; k < rep.max_cluster.size(); ++k) {
    if (rep.max_cluster[k] > rep.max_cluster[k - 1]) monotone = false;
  }
  rep.decreasing = monotone && rep.max_cluster.size() >= 2 && rep.max_cluster.back() < rep.max_cluster.front();
  return rep;
}

double maximal_function(const std::vector<double>& f, const EmpiricalCircleMeasure& m, FiberCoordinate x) {
  const std::size_t n = m.size();
  if (f.size() != n) throw Error(ErrorKind::DimensionMismatch, "maximal_function: one value per point");
  const auto& p = m.points();
  const auto& w = m.weights();
  double total_fw = 0.0;
  for (std::size_t k = 0; k < n; ++k) total_fw += f[k] * w[k];
  // The whole circle is an arc containing x.
  double best = total_fw;
  for (std::size_t a = 0; a < n; ++a) {
    const double x_off = wrap_angle(x.theta - p[a]);
    double fw = 0.0;
    double mass = 0.0;
    for (std::size_t len = 0; len < n; ++len) {
      const std::size_t b = (a + len) % n;
      fw += f[b] * w[b];
      mass += w[b];
      const double span = len == 0 ? 0.0 : wrap_angle(p[b] - p[a]);
      if (x_off <= span) best = std::max(best, fw / mass);
    }
  }
  return best;
}

double circular_wasserstein1(const EmpiricalCircleMeasure& a, const EmpiricalCircleMeasure& b) {
  // Breakpoints of D = F_a - F_b with F(t) = mass of [0, t].
  struct Jump {
    double at;
    double delta;
  };
  std::vector<Jump> jumps;
  jumps.reserve(a.size() + b.size());
  for (std::size_t k = 0; k < a.size(); ++k) jumps.push_back({a.points()[k], a.weights()[k]});
  for (std::size_t k = 0; k < b.size(); ++k) jumps.push_back({b.points()[k], -b.weights()[k]});
  std::stable_sort(jumps.begin(), jumps.end(), [](const Jump& x, const Jump& y) { return x.at < y.at; });
  std::vector<double> values;
  std::vector<double> lengths;
  double d = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    if (jumps[k].at > prev) {
      values.push_back(d);
      lengths.push_back(jumps[k].at - prev);
      prev = jumps[k].at;
    }
    d += jumps[k].delta;
  }
  values.push_back(d);
  lengths.push_back(kPi - prev);
  // Weighted median of D minimizes the integral of |D - c|.
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  double acc = 0.0;
  double c = values[order.back()];
  for (std::size_t k : order) {
    acc += lengths[k];
    if (acc >= 0.5 * kPi) {
      c = values[k];
      break;
    }
  }
  double w1 = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) w1 += lengths[k] * std::fabs(values[k] - c);
  return w1;
}

void write_measure_csv(const EmpiricalCircleMeasure& m, const std::string& path) {
  CsvWriter csv(path, "circle_measure", 1, {"theta", "weight"});
  for (std::size_t k = 0; k < m.size(); ++k) {
    csv.cell(m.points()[k]).cell(m.weights()[k]);
    csv.end_row();
  }
  csv.close();
}

EmpiricalCircleMeasure read_measure_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int ct = table.column("theta");
  const int cw = table.column("weight");
  if (ct < 0) throw Error(ErrorKind::Io, "'" + path + "': missing theta column");
  std::vector<double> thetas;
  std::vector<double> weights;
  try {
    for (const auto& row : table.rows) {
      thetas.push_back(std::stod(row[ct]));
      if (cw >= 0) weights.push_back(std::stod(row[cw]));
    }
  } catch (const std::exception&) {
    throw Error(ErrorKind::Io, "'" + path + "': non-numeric cell");
  }
  if (cw < 0) return EmpiricalCircleMeasure(std::move(thetas));
  return EmpiricalCircleMeasure(std::move(thetas), std::move(weights));
}

}  // namespace fibdim
