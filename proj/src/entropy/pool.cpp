#include "fibdim/entropy.hpp"

#include "fibdim/error.hpp"
#include "fibdim/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace fibdim {

namespace {

constexpr std::uint64_t kTargetTag = 0x7a59e7;

// Upper triangle of the projector onto the first j columns, off-diagonal
// entries scaled so that Euclidean distance equals Frobenius distance.
void projector_features(const Matrix& basis, int j, double* out) {
  const int d = static_cast<int>(basis.rows());
  const Matrix p = basis.leftCols(j) * basis.leftCols(j).transpose();
  int k = 0;
  for (int r = 0; r < d; ++r) {
    out[k++] = p(r, r);
    for (int c = r + 1; c < d; ++c) out[k++] = std::sqrt(2.0) * p(r, c);
  }
}

}  // namespace

FlagPool FlagPool::build(const EnsembleSpec& spec, const SeededSampler& sampler, const PoolOptions& options) {
  if (options.size == 0 || options.chains < 1 || options.burnin < 0) {
    throw Error(ErrorKind::InvalidArgument, "flag pool: size and chains must be positive");
  }
  FlagPool pool;
  const int d = spec.dim;
  pool.d_ = d;
  pool.count_ = options.size;
  pool.block_ = d * (d + 1) / 2;
  const std::size_t chains = std::min<std::size_t>(static_cast<std::size_t>(options.chains), options.size);
  const std::size_t per_chain = (options.size + chains - 1) / chains;
  const std::size_t dd = static_cast<std::size_t>(d) * d;
  const std::size_t stride = static_cast<std::size_t>(d - 1) * pool.block_;
  pool.bases_.assign(options.size * dd, 0.0);
  pool.features_.assign(options.size * stride, 0.0);
  parallel_for(chains, options.threads, [&](std::size_t c) {
    const SeededSampler chain = sampler.child(c);
    Flag f = initial_flag(d, chain);
    for (long n = -options.burnin; n < 0; ++n) f = act_flag(sample(spec, chain, draw_index(n)), f);
    const std::size_t first = c * per_chain;
    const std::size_t last = std::min(options.size, first + per_chain);
    for (std::size_t k = first; k < last; ++k) {
      const auto n = static_cast<long>(k - first);
      const Matrix& b = f.basis();
      std::copy(b.data(), b.data() + dd, pool.bases_.begin() + static_cast<std::ptrdiff_t>(k * dd));
      for (int j = 1; j < d; ++j) {
        projector_features(b, j, pool.features_.data() + k * stride + static_cast<std::size_t>(j - 1) * pool.block_);
      }
      f = act_flag(sample(spec, chain, draw_index(n)), f);
    }
  });
  return pool;
}

Flag FlagPool::flag(std::size_t k) const {
  if (k >= count_) throw Error(ErrorKind::InvalidArgument, "flag pool: index out of range");
  const std::size_t dd = static_cast<std::size_t>(d_) * d_;
  return flag_from_orthonormal(Eigen::Map<const Matrix>(bases_.data() + k * dd, d_, d_));
}

Eigen::Map<const Matrix> FlagPool::basis(std::size_t k) const {
  const std::size_t dd = static_cast<std::size_t>(d_) * d_;
  return Eigen::Map<const Matrix>(bases_.data() + k * dd, d_, d_);
}

Eigen::Map<const Vector> FlagPool::column(std::size_t k, int c) const {
  const std::size_t dd = static_cast<std::size_t>(d_) * d_;
  return Eigen::Map<const Vector>(bases_.data() + k * dd + static_cast<std::size_t>(c) * d_, d_);
}

int FlagPool::feature_count(int i) const {
  if (i < 1 || i >= d_) throw Error(ErrorKind::InvalidArgument, "flag pool: fiber index out of range");
  return (d_ - 2) * block_;
}

Neighborhood FlagPool::nearest(const Flag& target, int i, std::size_t k, std::uint64_t salt) const {
  if (target.dim() != d_) throw Error(ErrorKind::DimensionMismatch, "flag pool: target dimension");
  feature_count(i);
  if (k == 0 || k > count_) throw Error(ErrorKind::InvalidArgument, "flag pool: neighbour count out of range");
  Neighborhood nb;
  nb.indices.reserve(k);
  if (feature_count(i) == 0) {
    // Every pool flag is equally near: draw k distinct indices.
    CounterRng rng(SeededSampler{mix64(salt), count_}, salt);
    std::vector<bool> taken(count_, false);
    while (nb.indices.size() < k) {
      const std::size_t n = rng.below(count_);
      if (taken[n]) continue;
      taken[n] = true;
      nb.indices.push_back(n);
    }
    return nb;
  }
  const std::size_t stride = static_cast<std::size_t>(d_ - 1) * block_;
  std::vector<double> tf(stride);
  for (int j = 1; j < d_; ++j) projector_features(target.basis(), j, tf.data() + static_cast<std::size_t>(j - 1) * block_);

  struct Candidate {
    double dist;
    std::uint64_t key;
    std::size_t index;
    bool operator<(const Candidate& o) const { return dist != o.dist ? dist < o.dist : key < o.key; }
  };
  std::vector<Candidate> cand(count_);
  const std::uint64_t mixed_salt = mix64(salt);
  for (std::size_t n = 0; n < count_; ++n) {
    const double* f = features_.data() + n * stride;
    double s = 0.0;
    for (int j = 1; j < d_; ++j) {
      if (j == i) continue;
      const std::size_t off = static_cast<std::size_t>(j - 1) * block_;
      for (int e = 0; e < block_; ++e) {
        const double diff = f[off + e] - tf[off + e];
        s += diff * diff;
      }
    }
    cand[n] = {s, mix64(n ^ mixed_salt), n};
  }
  std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k - 1), cand.end());
  const auto half = static_cast<std::ptrdiff_t>(std::max<std::size_t>(k / 2, 1));
  std::nth_element(cand.begin(), cand.begin() + half - 1, cand.begin() + static_cast<std::ptrdiff_t>(k));
  double worst = 0.0;
  for (std::size_t n = 0; n < k; ++n) {
    nb.indices.push_back(cand[n].index);
    worst = std::max(worst, cand[n].dist);
  }
  nb.radius = std::sqrt(worst);
  return nb;
}

ConditionalFiberSample conditional_fiber_sample(const FlagPool& pool, const Flag& at, int i, std::size_t neighbors,
                                                CompletionRule rule, std::uint64_t salt) {
  const Neighborhood nb = pool.nearest(at, i, neighbors, salt);
  const PartialFlag pf = PartialFlag::of(at, i, rule);
  std::vector<double> thetas;
  thetas.reserve(nb.indices.size());
  for (std::size_t idx : nb.indices) thetas.push_back(pf.coordinate_of(pool.column(idx, i - 1)).theta);
  const std::size_t half = std::max<std::size_t>(neighbors / 2, 1);
  EmpiricalCircleMeasure full(thetas);
  const EmpiricalCircleMeasure halved(std::vector<double>(thetas.begin(), thetas.begin() + static_cast<std::ptrdiff_t>(half)));
  const double w1 = circular_wasserstein1(full, halved);
  return ConditionalFiberSample{i, neighbors, nb.radius, std::move(full), w1};
}

ConditionalFiberSample conditional_fiber_sample(const EnsembleSpec& spec, int i, std::size_t neighbors,
                                                const PoolOptions& pool_options, const SeededSampler& sampler,
                                                CompletionRule rule) {
  const FlagPool pool = FlagPool::build(spec, sampler, pool_options);
  const SeededSampler target_sampler = sampler.child(kTargetTag);
  Flag f = initial_flag(spec.dim, target_sampler);
  for (long n = -pool_options.burnin; n < 0; ++n) f = act_flag(sample(spec, target_sampler, draw_index(n)), f);
  return conditional_fiber_sample(pool, f, i, neighbors, rule, kTargetTag);
}

NonatomicityReport fiber_atom_check(const FlagPool& pool, int i, std::size_t neighbors, CompletionRule rule,
                                    std::uint64_t salt, double eps) {
  const Flag at = pool.flag(0);
  // Nested prefixes of the neighbour list; each is a conditional sample
  // drawn from within the same neighbourhood.
  const Neighborhood nb = pool.nearest(at, i, neighbors, salt);
  const PartialFlag pf = PartialFlag::of(at, i, rule);
  std::vector<double> thetas;
  for (std::size_t idx : nb.indices) thetas.push_back(pf.coordinate_of(pool.column(idx, i - 1)).theta);
  std::vector<EmpiricalCircleMeasure> nested;
  for (std::size_t div : {4, 2, 1}) {
    const std::size_t n = std::max<std::size_t>(thetas.size() / div, 1);
    nested.emplace_back(std::vector<double>(thetas.begin(), thetas.begin() + static_cast<std::ptrdiff_t>(n)));
  }
  return nonatomicity_diagnostic(nested, eps);
}

void require_nonatomic(const NonatomicityReport& report, int i) {
  if (!report.max_cluster.empty() && report.max_cluster.back() > 0.5) {
    throw Error(ErrorKind::AtomicFibers, "fiber " + std::to_string(i) + ": conditional measure has an atom of weight " +
                                             std::to_string(report.max_cluster.back()) +
                                             "; entropy and dimension are not reported");
  }
}

}  // namespace fibdim
