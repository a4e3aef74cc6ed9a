#pragma once

#include <cmath>
#include <cstdint>

namespace cosr {

// splitmix64. Small state, full 64-bit output, and -- unlike the standard
// <random> distributions -- bit-identical on every platform, which the
// determinism contract of the simulator depends on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53 significant bits
  double next_u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

  // uniform integer in [0, mask] for mask = 2^k - 1; exact, no modulo bias.
  // Contention windows are of this form by construction.
  std::uint64_t next_masked(std::uint64_t mask) { return next_u64() & mask; }

  // exponential with the given mean (mean 0 degenerates to 0)
  double exponential(double mean) {
    double u = next_u01();  // u < 1, so log(1 - u) is finite
    return -mean * std::log(1.0 - u);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed from a base seed and up to three
// stream tags (deployment index, station index, purpose tag, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(base ^ 0x243f6a8885a308d3ULL);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

// Purpose tags for derive_seed, kept in one place so streams never collide.
namespace seed_tag {
inline constexpr std::uint64_t kDeployment = 1;
inline constexpr std::uint64_t kTraffic = 2;
inline constexpr std::uint64_t kEngine = 3;
inline constexpr std::uint64_t kCalibration = 4;
}  // namespace seed_tag

}  // namespace cosr
