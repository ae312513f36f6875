#pragma once

#include "fibdim/circle_map.hpp"
#include "fibdim/ensemble.hpp"
#include "fibdim/stats.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fibdim {

// Index of the ensemble draw that produces A(n). Time may be negative; all
// times share one stream so overlapping windows see the same matrices.
std::uint64_t draw_index(long n);

// A starting flag drawn uniformly (Haar) from the stream's reserved index.
Flag initial_flag(int d, const SeededSampler& sampler);

struct OrbitOptions {
  long first = 0;     // first stored time
  long last = 0;      // last stored time (inclusive)
  long burnin = 1000;  // steps run before `first` and discarded
  int fiber = 0;       // fiber index i in 1..d-1, or 0 for no fiber data
  CompletionRule rule = CompletionRule::Standard;
};

// Orbit F(n+1) = A(n) F(n) over the window [first, last]. When a fiber index
// is set the trace also holds, for every n, the partial flag F_i(n), the
// coordinate x_n of S_i(n) in its fiber and the quotient map
// T(n): fiber over F_i(n) -> fiber over F_i(n+1).
class OrbitTrace {
 public:
  int dim() const { return dim_; }
  int fiber() const { return fiber_; }
  long first() const { return first_; }
  long last() const { return last_; }
  bool contains(long n) const { return n >= first_ && n <= last_; }

  const Flag& flag(long n) const;
  const Matrix& matrix(long n) const;          // A(n), first <= n < last
  const Vector& log_dets(long n) const;        // log|det_{S_j(n)} A(n)|, j = 0..d
  const PartialFlag& partial(long n) const;    // needs a fiber
  FiberCoordinate x(long n) const;             // needs a fiber
  const CircleMap& circle_map(long n) const;   // T(n), first <= n < last

 private:
  friend OrbitTrace forward_orbit(const EnsembleSpec&, const Flag&, const OrbitOptions&,
                                  const SeededSampler&);
  std::size_t slot(long n, bool step) const;

  int dim_ = 0;
  int fiber_ = 0;
  long first_ = 0;
  long last_ = 0;
  std::vector<Flag> flags_;
  std::vector<Matrix> matrices_;
  std::vector<Vector> log_dets_;
  std::vector<PartialFlag> partials_;
  std::vector<FiberCoordinate> x_;
  std::vector<CircleMap> maps_;
};

// F0 is the flag at time first - burnin. Throws DegenerateBasis (with the
// step index) if re-orthonormalization fails.
OrbitTrace forward_orbit(const EnsembleSpec& spec, const Flag& f0, const OrbitOptions& options,
                         const SeededSampler& sampler);

struct StableLineOptions {
  int min_lookahead = 16;
  int max_lookahead = 512;
  double tolerance = 1e-8;
};

struct StableLine {
  FiberCoordinate y;
  int lookahead = 0;
  double shift = 0.0;  // distance between the K and K/2 estimates
};

// Most contracted direction at time n of the quotient cocycle
// T(n+K-1) ... T(n), doubling K until successive estimates agree. Throws
// GapTooSmall if they still differ by more than the tolerance at the maximal
// lookahead, and InvalidArgument if the trace does not reach n + K.
StableLine oseledets_stable_line(const OrbitTrace& trace, long n,
                                 const StableLineOptions& options = {});

// Stable line estimate for one fixed lookahead K >= 1 (no convergence check).
FiberCoordinate stable_line_at(const OrbitTrace& trace, long n, int lookahead);

// Most contracted right-singular direction of a 2x2 matrix, as a coordinate.
FiberCoordinate most_contracted_direction(const Eigen::Matrix2d& m);

struct AngleDecayReport {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double threshold = 0.0;  // 0.02 * gap
  bool sublinear = false;  // |slope| < threshold
  std::size_t points = 0;
};

// Regression of log dist(x_n, y_n) on n over [from, to]. gap is the
// exponent gap used for the threshold.
AngleDecayReport angle_decay_check(const OrbitTrace& trace, long from, long to, double gap,
                                   const StableLineOptions& options = {});

// Arc on a fiber given by a known interior point and signed offsets
// lo < 0 < hi in the half-scaled metric.
struct Arc {
  FiberCoordinate center;
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(FiberCoordinate t) const;
  FiberCoordinate lower() const { return FiberCoordinate(center.theta + lo); }
  FiberCoordinate upper() const { return FiberCoordinate(center.theta + hi); }
};

// Closed arc containing x that avoids the open ball of radius dist(x, y)/2
// around y. Throws DegenerateFiberPair if x and y coincide within 1e-12.
Arc stationary_interval(FiberCoordinate x, FiberCoordinate y);

// Image of an arc under a circle map, tracked through the image of its
// interior point. Throws IntervalWrap if the image is no longer an arc.
Arc push_arc(const CircleMap& t, const Arc& arc);

// J_n = T(-1) o ... o T(-n) (I_{-n}) with I_{-n} the stationary interval of
// the pair (x_{-n}, y_{-n}). Contains x_0 by construction.
Arc interval_pullforward(const OrbitTrace& trace, const Arc& i_minus_n, long n);

struct ContractionRow {
  long n = 0;
  double mean_log_length = 0.0;  // mean over replicas of log length(J_n)
  double stderr = 0.0;
};

struct IntervalContractionReport {
  int fiber = 0;
  std::vector<ContractionRow> rows;  // n = 1..n_max
  LinearFit fit;                     // mean log length against n
  int replicas = 0;                  // replicas that contributed
  int skipped = 0;                   // replicas lost to a failed stable line or a wrapped arc
};

// Mean log length of the pulled-forward stationary intervals J_n over
// independent replicas (replica r runs on sampler.child(r)); its slope in n
// estimates -(chi_i - chi_{i+1}). Independent of `threads`.
IntervalContractionReport interval_contraction(const EnsembleSpec& spec, int i, long n_max, int replicas,
                                               const SeededSampler& sampler, int threads = 1,
                                               const StableLineOptions& stable = {});

// Trace CSV: n, log-det increments per j, x_n, y_n, interval endpoints.
// y and intervals are optional per row (empty cells when missing).
struct TraceRow {
  long n = 0;
  std::optional<FiberCoordinate> y;
  std::optional<Arc> interval;
};
void write_trace_csv(const OrbitTrace& trace, const std::vector<TraceRow>& rows,
                     const std::string& path);

}  // namespace fibdim
