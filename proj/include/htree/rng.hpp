#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace htree {

/// 64-bit mixing step of splitmix64.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// FNV-1a, used to fold experiment identifiers into seeds.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Seed for replica `index` of experiment `experiment_id`:
/// splitmix64(splitmix64(master ^ fnv1a64(id)) + index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view experiment_id, std::uint64_t index) noexcept;

/// Portable random source: mt19937_64 with hand-written uniform transforms,
/// so streams do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on {0, ..., n-1}; n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform on [0,1) with 53 random bits.
  double uniform();

  /// Fair coin.
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace htree
