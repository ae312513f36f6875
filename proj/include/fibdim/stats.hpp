#pragma once

#include <cstddef>
#include <vector>

namespace fibdim {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanEstimate {
  double mean = 0.0;
  double stderr = 0.0;  // sample sd / sqrt(n); 0 for n < 2
  std::size_t n = 0;
};

MeanEstimate mean_and_stderr(const std::vector<double>& xs);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;  // ordinary least squares
  double r_squared = 0.0;
  std::size_t n = 0;
};

// Least-squares line through (x_k, y_k). Requires at least two distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Linear-interpolated quantile, q in [0, 1]. Takes a copy to sort.
double quantile(std::vector<double> xs, double q);

}  // namespace fibdim
