#pragma once

#include <cstdint>

namespace fibdim {

// Identifies one independent random stream: a replica, a pool chain, ...
struct SeededSampler {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  SeededSampler with_stream(std::uint64_t s) const { return {seed, s}; }
  // Derives a sub-stream; used to keep, e.g., pool chains and estimator
  // replicas of the same experiment apart.
  SeededSampler child(std::uint64_t tag) const;
};

// Counter-based generator: the output depends only on (seed, stream, index,
// position), never on call order across streams. Draw `index` owns 2^20
// consecutive counter values.
class CounterRng {
 public:
  CounterRng(const SeededSampler& s, std::uint64_t index);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace fibdim
