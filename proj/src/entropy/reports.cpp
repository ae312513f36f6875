#include "fibdim/entropy.hpp"

#include "fibdim/error.hpp"
#include "fibdim/parallel.hpp"
#include "fibdim/stats.hpp"

#include <algorithm>
#include <cmath>

namespace fibdim {

namespace {

constexpr std::uint64_t kDimensionTag = 0xd173;

}  // namespace

GapInequalityRow gap_inequality_row(const SpectrumEstimate& spectrum, int i, std::optional<KappaEstimate> density,
                                    std::optional<KappaEstimate> interval) {
  const int d = static_cast<int>(spectrum.chi.size());
  if (i < 1 || i >= d) throw Error(ErrorKind::InvalidArgument, "gap inequality: fiber index out of range");
  GapInequalityRow row;
  row.fiber = i;
  row.gap = spectrum.gap(i);
  row.gap_stderr = spectrum.gap_stderr(i);
  row.density = std::move(density);
  row.interval = std::move(interval);
  row.inequality_holds = true;
  row.kappa_zero = true;
  bool any = false;
  for (const auto* est : {&row.density, &row.interval}) {
    if (!*est) continue;
    any = true;
    const double combined = std::hypot((*est)->stderr, row.gap_stderr);
    row.combined_stderr = std::max(row.combined_stderr, combined);
    if ((*est)->kappa > row.gap + 2.0 * combined) row.inequality_holds = false;
    if (std::fabs((*est)->kappa) > 2.0 * (*est)->stderr) row.kappa_zero = false;
  }
  if (!any) throw Error(ErrorKind::InvalidArgument, "gap inequality: no entropy estimate given");
  if (row.density && row.interval) {
    const double scale = std::max(std::fabs(row.density->kappa), std::fabs(row.interval->kappa));
    row.relative_disagreement = scale > 0.0 ? std::fabs(row.density->kappa - row.interval->kappa) / scale : 0.0;
  }
  return row;
}

DimensionFormulaRow dimension_formula_row(const FlagPool& pool, int i, const KappaEstimate& kappa,
                                          const SpectrumEstimate& spectrum, const DimensionOptions& options,
                                          const SeededSampler& sampler) {
  if (!(kappa.kappa > 2.0 * kappa.stderr)) {
    throw Error(ErrorKind::HypothesisNotMet, "fiber " + std::to_string(i) + ": entropy " +
                                                 std::to_string(kappa.kappa) + " is within two standard errors of 0; "
                                                 "the dimension formula needs positive entropy");
  }
  const double gap = spectrum.gap(i);
  if (!(gap > 2.0 * spectrum.gap_stderr(i))) {
    throw Error(ErrorKind::GapTooSmall, "fiber " + std::to_string(i) + ": exponent gap is not positive");
  }
  if (options.points < 2) throw Error(ErrorKind::InvalidArgument, "dimension formula: need at least two points");
  const bool trivial = pool.feature_count(i) == 0;
  const std::size_t k = trivial ? options.stationary_sample : options.neighbors;
  if (k + 1 > pool.size()) throw Error(ErrorKind::InvalidArgument, "dimension formula: sample exceeds the pool");

  const SeededSampler picks = sampler.child(kDimensionTag);
  std::vector<std::optional<DimensionEstimate>> slots(options.points);
  parallel_for(options.points, options.threads, [&](std::size_t p) {
    CounterRng rng(picks, p);
    const std::size_t t = rng.below(pool.size());
    const Flag at = pool.flag(t);
    // The evaluation point is kept out of its own sample.
    Neighborhood nb = pool.nearest(at, i, k + 1, mix64(p));
    const auto self = std::find(nb.indices.begin(), nb.indices.end(), t);
    nb.indices.erase(self != nb.indices.end() ? self : nb.indices.end() - 1);
    const PartialFlag pf = PartialFlag::of(at, i, options.rule);
    std::vector<double> thetas;
    thetas.reserve(k);
    for (std::size_t idx : nb.indices) thetas.push_back(pf.coordinate_of(pool.column(idx, i - 1)).theta);
    const EmpiricalCircleMeasure m(std::move(thetas));
    try {
      slots[p] = local_dimension(m, pf.coordinate_of(pool.column(t, i - 1)), options.radii);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientMass) throw;
    }
  });

  DimensionFormulaRow row;
  row.fiber = i;
  row.kappa = kappa.kappa;
  row.kappa_stderr = kappa.stderr;
  row.gap = gap;
  row.predicted = kappa.kappa / gap;
  std::vector<double> slopes;
  for (auto& s : slots) {
    if (!s) continue;
    slopes.push_back(s->slope);
    row.points.push_back(std::move(*s));
  }
  if (slopes.size() < 2) {
    throw Error(ErrorKind::InsufficientMass, "dimension formula: fewer than two points had enough mass");
  }
  row.mean_slope = mean_and_stderr(slopes).mean;
  row.slope_iqr = quantile(slopes, 0.75) - quantile(slopes, 0.25);
  row.relative_error = std::fabs(row.mean_slope - row.predicted) / row.predicted;
  return row;
}

}  // namespace fibdim
