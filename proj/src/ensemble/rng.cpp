#include "fibdim/rng.hpp"

#include <cmath>
#include <numbers>

namespace fibdim {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SeededSampler SeededSampler::child(std::uint64_t tag) const {
  return {mix64(seed ^ mix64(tag + 0x5851F42D4C957F2DULL)), stream};
}

CounterRng::CounterRng(const SeededSampler& s, std::uint64_t index)
    : key_(mix64(mix64(s.seed) ^ mix64(s.stream * kGolden + 0x2545F4914F6CDD1DULL))),
      counter_(index << 20) {}

std::uint64_t CounterRng::next_u64() { return mix64(key_ + (++counter_) * kGolden); }

double CounterRng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double phi = 2.0 * std::numbers::pi * uniform();
  spare_normal_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

std::uint64_t CounterRng::below(std::uint64_t n) {
  // Lemire's multiply-shift; the bias is below 2^-40 for the sizes used here.
  const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace fibdim
