#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace fsnet {

/// xoshiro256** generator seeded through SplitMix64.
///
/// Everything derived from it (uniforms, normals, index draws, Gumbel noise) is
/// implemented here rather than through <random> distributions, whose output is
/// implementation-defined. The same seed yields the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal via Box-Muller (both variates are used).
  double normal();
  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

inline constexpr double kGumbelEpsilon = 1e-12;

/// g = -log(-log(u)) with u clamped into [eps, 1 - eps].
double gumbel_from_uniform(double u);

std::vector<double> sample_gumbel(Rng& rng, std::size_t count);

/// Fisher-Yates shuffle driven by `rng`.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace fsnet
