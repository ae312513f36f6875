#include "fibdim/error.hpp"
#include "fibdim/orbit.hpp"
#include "fibdim/parallel.hpp"

#include <cmath>
#include <optional>

namespace fibdim {

namespace {
constexpr double kCoincidenceTol = 1e-12;
}

bool Arc::contains(FiberCoordinate t) const {
  const double o = circle_offset(center.theta, t.theta);
  for (double shift : {0.0, kPi, -kPi}) {
    if (o + shift >= lo && o + shift <= hi) return true;
  }
  return false;
}

Arc stationary_interval(FiberCoordinate x, FiberCoordinate y) {
  const double o = circle_offset(x.theta, y.theta);
  if (std::fabs(o) < kCoincidenceTol) {
    throw Error(ErrorKind::DegenerateFiberPair, "stationary_interval: x and y coincide");
  }
  // The excluded ball around y has radius |o|/2; the remaining arc runs from
  // y + |o|/2 around through x to y - |o|/2.
  Arc arc;
  arc.center = x;
  if (o > 0.0) {
    arc.hi = 0.5 * o;
    arc.lo = 1.5 * o - kPi;
  } else {
    arc.lo = 0.5 * o;
    arc.hi = kPi + 1.5 * o;
  }
  return arc;
}

Arc push_arc(const CircleMap& t, const Arc& arc) {
  const double a = t.push_offset(arc.center, arc.lo);
  const double b = t.push_offset(arc.center, arc.hi);
  Arc out;
  out.center = t(arc.center);
  if (t.preserves_orientation()) {
    out.lo = a;
    out.hi = b;
  } else {
    out.lo = b;
    out.hi = a;
  }
  if (!(out.lo < 0.0 && out.hi > 0.0 && out.hi - out.lo <= kPi)) {
    throw Error(ErrorKind::IntervalWrap, "pushed interval is no longer an arc around its point");
  }
  return out;
}

Arc interval_pullforward(const OrbitTrace& trace, const Arc& i_minus_n, long n) {
  if (n < 0 || !trace.contains(-n) || !trace.contains(0)) {
    throw Error(ErrorKind::InvalidArgument, "interval_pullforward: trace does not cover [-n, 0]");
  }
  Arc arc = i_minus_n;
  for (long k = -n; k < 0; ++k) arc = push_arc(trace.circle_map(k), arc);
  return arc;
}

IntervalContractionReport interval_contraction(const EnsembleSpec& spec, int i, long n_max, int replicas,
                                               const SeededSampler& sampler, int threads,
                                               const StableLineOptions& stable) {
  if (i < 1 || i >= spec.dim) throw Error(ErrorKind::InvalidArgument, "interval contraction: fiber index out of range");
  if (n_max < 2 || replicas < 1) throw Error(ErrorKind::InvalidArgument, "interval contraction: need n_max >= 2 and replicas >= 1");
  std::vector<std::optional<std::vector<double>>> slots(static_cast<std::size_t>(replicas));
  parallel_for(slots.size(), threads, [&](std::size_t r) {
    const SeededSampler s = sampler.child(r);
    OrbitOptions o;
    o.first = -n_max;
    o.last = stable.max_lookahead;
    o.fiber = i;
    const OrbitTrace trace = forward_orbit(spec, initial_flag(spec.dim, s), o, s);
    std::vector<double> logs;
    logs.reserve(static_cast<std::size_t>(n_max));
    try {
      for (long n = 1; n <= n_max; ++n) {
        const Arc start = stationary_interval(trace.x(-n), oseledets_stable_line(trace, -n, stable).y);
        logs.push_back(std::log(interval_pullforward(trace, start, n).length()));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::GapTooSmall && e.kind() != ErrorKind::DegenerateFiberPair &&
          e.kind() != ErrorKind::IntervalWrap) {
        throw;
      }
      return;
    }
    slots[r] = std::move(logs);
  });

  IntervalContractionReport rep;
  rep.fiber = i;
  std::vector<std::vector<double>> by_n(static_cast<std::size_t>(n_max));
  for (const auto& slot : slots) {
    if (!slot) {
      ++rep.skipped;
      continue;
    }
    ++rep.replicas;
    for (std::size_t k = 0; k < slot->size(); ++k) by_n[k].push_back((*slot)[k]);
  }
  if (rep.replicas < 2) throw Error(ErrorKind::NoAcceptedReplicas, "interval contraction: fewer than two replicas survived");
  std::vector<double> ns;
  std::vector<double> means;
  for (long n = 1; n <= n_max; ++n) {
    const MeanEstimate m = mean_and_stderr(by_n[static_cast<std::size_t>(n - 1)]);
    rep.rows.push_back({n, m.mean, m.stderr});
    ns.push_back(static_cast<double>(n));
    means.push_back(m.mean);
  }
  rep.fit = fit_line(ns, means);
  return rep;
}

}  // namespace fibdim
