#include "fibdim/stats.hpp"

#include "fibdim/error.hpp"

#include <algorithm>
#include <cmath>

namespace fibdim {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

MeanEstimate mean_and_stderr(const std::vector<double>& xs) {
  MeanEstimate est;
  est.n = xs.size();
  if (xs.empty()) return est;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  est.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() < 2) return est;
  CompensatedSum ss;
  for (double x : xs) ss.add((x - est.mean) * (x - est.mean));
  const double var = ss.value() / static_cast<double>(xs.size() - 1);
  est.stderr = std::sqrt(var / static_cast<double>(xs.size()));
  return est;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "fit_line: size mismatch");
  LinearFit fit;
  fit.n = x.size();
  if (x.size() < 2) throw Error(ErrorKind::InvalidArgument, "fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::InvalidArgument, "fit_line: abscissae are all equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double rss = std::max(0.0, syy - fit.slope * sxy);
  fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  if (x.size() > 2) fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

}  // namespace fibdim
