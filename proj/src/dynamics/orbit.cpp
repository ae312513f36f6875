#include "fibdim/orbit.hpp"

#include "fibdim/csv.hpp"
#include "fibdim/error.hpp"
#include "fibdim/stats.hpp"

#include <algorithm>
#include <cmath>

namespace fibdim {

namespace {

constexpr std::uint64_t kTimeOffset = std::uint64_t{1} << 40;
constexpr std::uint64_t kInitialFlagIndex = 0;
// A contracted direction is only meaningful once the composed quotient map
// separates its singular values.
constexpr double kMaxSingularRatio = 0.5;

// sigma_2 / sigma_1 of a 2x2 matrix.
double singular_ratio(const Eigen::Matrix2d& m) {
  const double f = m.squaredNorm();
  const double det = std::fabs(m.determinant());
  const double disc = std::sqrt(std::max(0.0, f * f - 4.0 * det * det));
  const double s1sq = 0.5 * (f + disc);
  const double s2sq = 0.5 * (f - disc);
  return s1sq > 0.0 ? std::sqrt(std::max(0.0, s2sq) / s1sq) : 1.0;
}

LinearMap draw(const EnsembleSpec& spec, const SeededSampler& sampler, long n) {
  return sample(spec, sampler, draw_index(n));
}

Flag step_flag(const LinearMap& a, const Flag& f, long n) {
  try {
    return act_flag(a, f);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateBasis) throw;
    throw Error(ErrorKind::DegenerateBasis, "orbit step " + std::to_string(n) + ": " + e.what());
  }
}

}  // namespace

std::uint64_t draw_index(long n) {
  return kTimeOffset + static_cast<std::uint64_t>(n);
}

Flag initial_flag(int d, const SeededSampler& sampler) {
  CounterRng rng(sampler, kInitialFlagIndex);
  return flag_from_orthonormal(haar_rotation(d, rng));
}

std::size_t OrbitTrace::slot(long n, bool step) const {
  if (n < first_ || n > last_ || (step && n == last_)) {
    throw Error(ErrorKind::InvalidArgument, "time " + std::to_string(n) + " outside orbit window [" +
                                                std::to_string(first_) + ", " + std::to_string(last_) + "]");
  }
  return static_cast<std::size_t>(n - first_);
}

const Flag& OrbitTrace::flag(long n) const { return flags_[slot(n, false)]; }
const Matrix& OrbitTrace::matrix(long n) const { return matrices_[slot(n, true)]; }
const Vector& OrbitTrace::log_dets(long n) const { return log_dets_[slot(n, true)]; }

const PartialFlag& OrbitTrace::partial(long n) const {
  if (fiber_ == 0) throw Error(ErrorKind::InvalidArgument, "orbit trace has no fiber data");
  return partials_[slot(n, false)];
}

FiberCoordinate OrbitTrace::x(long n) const {
  if (fiber_ == 0) throw Error(ErrorKind::InvalidArgument, "orbit trace has no fiber data");
  return x_[slot(n, false)];
}

const CircleMap& OrbitTrace::circle_map(long n) const {
  if (fiber_ == 0) throw Error(ErrorKind::InvalidArgument, "orbit trace has no fiber data");
  return maps_[slot(n, true)];
}

OrbitTrace forward_orbit(const EnsembleSpec& spec, const Flag& f0, const OrbitOptions& options,
                         const SeededSampler& sampler) {
  const int d = spec.dim;
  if (f0.dim() != d) throw Error(ErrorKind::DimensionMismatch, "forward_orbit: flag dimension");
  if (options.last < options.first || options.burnin < 0) {
    throw Error(ErrorKind::InvalidArgument, "forward_orbit: empty window or negative burn-in");
  }
  if (options.fiber < 0 || options.fiber >= d) {
    throw Error(ErrorKind::InvalidArgument, "forward_orbit: fiber index out of range");
  }
  OrbitTrace trace;
  trace.dim_ = d;
  trace.fiber_ = options.fiber;
  trace.first_ = options.first;
  trace.last_ = options.last;

  Flag f = f0;
  for (long n = options.first - options.burnin; n < options.first; ++n) {
    f = step_flag(draw(spec, sampler, n), f, n);
  }
  const auto count = static_cast<std::size_t>(options.last - options.first + 1);
  trace.flags_.reserve(count);
  trace.matrices_.reserve(count - 1);
  trace.log_dets_.reserve(count - 1);
  for (long n = options.first;; ++n) {
    trace.flags_.push_back(f);
    if (n == options.last) break;
    const LinearMap a = draw(spec, sampler, n);
    FlagStep step = [&] {
      try {
        return FlagStep::apply(a, f);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateBasis) throw;
        throw Error(ErrorKind::DegenerateBasis, "orbit step " + std::to_string(n) + ": " + e.what());
      }
    }();
    trace.matrices_.push_back(a.matrix());
    trace.log_dets_.push_back(std::move(step.log_dets));
    f = std::move(step.image);
  }

  if (options.fiber > 0) {
    const int i = options.fiber;
    trace.partials_.reserve(count);
    trace.x_.reserve(count);
    for (const Flag& g : trace.flags_) {
      trace.partials_.push_back(PartialFlag::of(g, i, options.rule));
      trace.x_.push_back(trace.partials_.back().coordinate_of(g.basis().col(i - 1)));
    }
    trace.maps_.reserve(count - 1);
    for (std::size_t k = 0; k + 1 < count; ++k) {
      trace.maps_.emplace_back(quotient_matrix(LinearMap::trusted(trace.matrices_[k]),
                                               trace.partials_[k], trace.partials_[k + 1]));
    }
  }
  return trace;
}

FiberCoordinate most_contracted_direction(const Eigen::Matrix2d& m) {
  const Eigen::Matrix2d g = m.transpose() * m;
  const double a = g(0, 0);
  const double b = g(0, 1);
  const double c = g(1, 1);
  // Principal axis of the quadratic form; the contracted one is orthogonal.
  const double expanding = 0.5 * std::atan2(2.0 * b, a - c);
  return FiberCoordinate(expanding + 0.5 * kPi);
}

FiberCoordinate stable_line_at(const OrbitTrace& trace, long n, int lookahead) {
  if (lookahead < 1) throw Error(ErrorKind::InvalidArgument, "stable_line_at: lookahead must be >= 1");
  if (!trace.contains(n) || !trace.contains(n + lookahead)) {
    throw Error(ErrorKind::InvalidArgument, "stable_line_at: trace does not cover the lookahead");
  }
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  for (int k = 0; k < lookahead; ++k) {
    m = trace.circle_map(n + k).quotient() * m;
    m /= m.cwiseAbs().maxCoeff();
  }
  return most_contracted_direction(m);
}

StableLine oseledets_stable_line(const OrbitTrace& trace, long n, const StableLineOptions& options) {
  if (options.min_lookahead < 2 || options.max_lookahead < options.min_lookahead) {
    throw Error(ErrorKind::InvalidArgument, "oseledets_stable_line: bad lookahead range");
  }
  if (!trace.contains(n) || !trace.contains(n + options.min_lookahead)) {
    throw Error(ErrorKind::InvalidArgument, "oseledets_stable_line: trace does not cover the lookahead");
  }
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  int k = 0;
  int checkpoint = options.min_lookahead / 2;
  FiberCoordinate previous;
  bool have_previous = false;
  StableLine result;
  while (true) {
    while (k < checkpoint) {
      m = trace.circle_map(n + k).quotient() * m;
      m /= m.cwiseAbs().maxCoeff();
      ++k;
    }
    const FiberCoordinate y = most_contracted_direction(m);
    if (have_previous) {
      result.y = y;
      result.lookahead = k;
      result.shift = circle_distance(y, previous);
      if (k >= options.min_lookahead && result.shift < options.tolerance &&
          singular_ratio(m) <= kMaxSingularRatio) {
        return result;
      }
    }
    previous = y;
    have_previous = true;
    const int next = 2 * checkpoint;
    if (next > options.max_lookahead) break;
    if (!trace.contains(n + next)) {
      throw Error(ErrorKind::InvalidArgument,
                  "oseledets_stable_line: trace too short for lookahead " + std::to_string(next));
    }
    checkpoint = next;
  }
  throw Error(ErrorKind::GapTooSmall,
              "stable line at time " + std::to_string(n) + " did not converge: shift " +
                  format_double(result.shift) + ", singular value ratio " + format_double(singular_ratio(m)) +
                  " at lookahead " + std::to_string(result.lookahead));
}

AngleDecayReport angle_decay_check(const OrbitTrace& trace, long from, long to, double gap,
                                   const StableLineOptions& options) {
  std::vector<double> ns;
  std::vector<double> logs;
  for (long n = from; n <= to; ++n) {
    const StableLine y = oseledets_stable_line(trace, n, options);
    const double dist = circle_distance(trace.x(n), y.y);
    if (!(dist > 0.0)) {
      throw Error(ErrorKind::DegenerateFiberPair, "x and y coincide at time " + std::to_string(n));
    }
    ns.push_back(static_cast<double>(n));
    logs.push_back(std::log(dist));
  }
  const LinearFit fit = fit_line(ns, logs);
  AngleDecayReport rep;
  rep.slope = fit.slope;
  rep.slope_stderr = fit.slope_stderr;
  rep.threshold = 0.02 * gap;
  rep.sublinear = std::fabs(fit.slope) < rep.threshold;
  rep.points = ns.size();
  return rep;
}

void write_trace_csv(const OrbitTrace& trace, const std::vector<TraceRow>& rows,
                     const std::string& path) {
  std::vector<std::string> cols{"n"};
  for (int j = 1; j <= trace.dim(); ++j) cols.push_back("logdet_increment_" + std::to_string(j));
  for (const char* c : {"x", "y", "interval_lower", "interval_upper"}) cols.emplace_back(c);
  CsvWriter csv(path, "trace", 1, cols);
  for (const TraceRow& row : rows) {
    csv.cell(row.n);
    if (row.n < trace.last()) {
      const Vector& ld = trace.log_dets(row.n);
      for (int j = 1; j <= trace.dim(); ++j) csv.cell(ld(j) - ld(j - 1));
    } else {
      for (int j = 1; j <= trace.dim(); ++j) csv.empty();
    }
    if (trace.fiber() > 0) {
      csv.cell(trace.x(row.n).theta);
    } else {
      csv.empty();
    }
    if (row.y) {
      csv.cell(row.y->theta);
    } else {
      csv.empty();
    }
    if (row.interval) {
      csv.cell(row.interval->lower().theta).cell(row.interval->upper().theta);
    } else {
      csv.empty().empty();
    }
    csv.end_row();
  }
  csv.close();
}

}  // namespace fibdim
