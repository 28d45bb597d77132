#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace torusrecon {

/// Counter-based normal generator: every draw is a pure function of its key, so
/// coefficients can be addressed in any order and from any thread.
class CounterRng {
 public:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finaliser
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix(h ^ (v + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2)));
  }

  /// Uniform in (0, 1].
  static double uniform_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Two independent standard normals (Box–Muller) for the given key.
  static std::pair<double, double> normal_pair(std::uint64_t key) {
    const std::uint64_t b1 = mix(key);
    const std::uint64_t b2 = mix(b1 ^ 0xd1b54a32d192ed03ULL);
    const double r = std::sqrt(-2.0 * std::log(uniform_open(b1)));
    const double theta = 2.0 * std::numbers::pi * uniform_open(b2);
    return {r * std::cos(theta), r * std::sin(theta)};
  }
};

/// Stream tags separating the independent random quantities of one seed.
enum class RngStream : std::uint64_t {
  kPriorCoefficients = 1,
  kObservationNoise = 2,
  kSgdBatches = 3,
  kQueryPoints = 4,
  kSampleSeeds = 5,
};

inline std::uint64_t stream_key(std::uint64_t seed, RngStream stream) {
  return CounterRng::combine(CounterRng::mix(seed), static_cast<std::uint64_t>(stream));
}

}  // namespace torusrecon
