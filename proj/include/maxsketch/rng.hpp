#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, counter), so any projection row or stream item can be regenerated
// independently of the others and without shared generator state.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace maxsketch {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive an independent key for sub-stream `index` of `key`.
[[nodiscard]] constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t index) noexcept {
  return mix64(mix64(key ^ 0x6a09e667f3bcc909ULL) + mix64(index ^ 0xbb67ae8584caa73bULL));
}

/// Uniform on the open interval (0, 1) from the top 52 bits; every value
/// (j + 0.5) * 2^-52 is exact, so neither endpoint is reachable.
[[nodiscard]] constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Box-Muller pair from two open-interval uniforms.
inline void box_muller(double u1, double u2, double& z0, double& z1) noexcept {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(a);
  z1 = r * std::sin(a);
}

/// Fill `out` with the standard normals of row `row` under `seed`.
/// Entry i depends only on (seed, row, i / 2).
inline void fill_normal_row(std::uint64_t seed, std::uint64_t row, std::span<double> out) noexcept {
  const std::uint64_t key = derive_key(seed, row);
  const std::size_t d = out.size();
  for (std::size_t i = 0; i < d; i += 2) {
    const std::uint64_t pair = i / 2;
    const double u1 = to_open_unit(mix64(key ^ (2 * pair)));
    const double u2 = to_open_unit(mix64(key ^ (2 * pair + 1) ^ 0xa54ff53a5f1d36f1ULL));
    double z0 = 0.0;
    double z1 = 0.0;
    box_muller(u1, u2, z0, z1);
    out[i] = z0;
    if (i + 1 < d) out[i + 1] = z1;
  }
}

/// Sequential generator over a counter. Cheap to copy; copies replay the
/// same sequence.
class counter_rng {
public:
  constexpr explicit counter_rng(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t next_u64() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform on (0, 1).
  constexpr double uniform() noexcept { return to_open_unit(next_u64()); }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, bound). Uses rejection to avoid modulo bias.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % bound;
  }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    double z0 = 0.0;
    box_muller(u1, u2, z0, spare_);
    has_spare_ = true;
    return z0;
  }

  void fill_normal(std::span<double> out) noexcept {
    for (double& v : out) v = normal();
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace maxsketch
