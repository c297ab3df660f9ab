#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maxsketch/detail/dot.hpp"
#include "maxsketch/error.hpp"
#include "maxsketch/rng.hpp"

namespace maxsketch {

enum class projection_storage {
  materialized, ///< keep the m x d matrix in memory
  on_the_fly,   ///< regenerate each row from the seed when it is needed
};

/// Identity of a projection set. Rows are a pure function of (seed, d, m), so
/// the fingerprint is too.
[[nodiscard]] constexpr std::uint64_t projection_fingerprint(std::uint64_t seed, std::size_t d, std::size_t m) noexcept {
  return derive_key(derive_key(mix64(seed ^ 0x4d58534b31ULL), d), m);
}

/// The m Gaussian directions w_1..w_m in R^d. Immutable after creation.
class projection_set {
public:
  [[nodiscard]] static projection_set create(std::size_t d, std::size_t m, std::uint64_t seed,
                                             projection_storage storage = projection_storage::materialized) {
    if (d == 0 || m == 0) {
      throw invalid_parameter("projection set needs d >= 1 and m >= 1 (got d=" + std::to_string(d) +
                              ", m=" + std::to_string(m) + ")");
    }
    projection_set p(d, m, seed, storage);
    if (storage == projection_storage::materialized) {
      p.matrix_.resize(m * d);
      for (std::size_t j = 0; j < m; ++j) p.fill_row(j, std::span<double>(p.matrix_.data() + j * d, d));
    }
    return p;
  }

  [[nodiscard]] std::size_t d() const noexcept { return d_; }
  [[nodiscard]] std::size_t m() const noexcept { return m_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] projection_storage storage() const noexcept { return storage_; }
  [[nodiscard]] std::uint64_t fingerprint() const noexcept { return projection_fingerprint(seed_, d_, m_); }

  /// Regenerate row j. Does not touch the materialized matrix.
  void fill_row(std::size_t j, std::span<double> out) const noexcept { fill_normal_row(seed_, j, out.first(d_)); }

  /// Materialized matrix, row-major m x d. Empty in on-the-fly mode.
  [[nodiscard]] std::span<const double> matrix() const noexcept { return matrix_; }

  [[nodiscard]] std::vector<double> row(std::size_t j) const {
    std::vector<double> out(d_);
    if (storage_ == projection_storage::materialized) {
      std::copy_n(matrix_.data() + j * d_, d_, out.data());
    } else {
      fill_row(j, out);
    }
    return out;
  }

  /// maxima[j] = max(maxima[j], max_i <w_j, x_i>) over `count` row-major items.
  void accumulate_max(std::span<const double> items, std::size_t count, std::span<double> maxima) const {
    if (items.size() < count * d_ || maxima.size() != m_) {
      throw dimension_error("accumulate_max: buffer shapes do not match the projection set");
    }
    if (count == 0) return;
    if (storage_ == projection_storage::materialized) {
      const double* base = matrix_.data();
      const std::size_t d = d_;
      detail::accumulate_max([base, d](std::size_t j, std::size_t) { return base + j * d; }, m_, items.data(), count, d_,
                             maxima.data());
    } else {
      std::vector<double> scratch(detail::tile_rows * d_);
      detail::accumulate_max(
          [this, &scratch](std::size_t j, std::size_t r) {
            for (std::size_t k = 0; k < r; ++k) fill_row(j + k, std::span<double>(scratch).subspan(k * d_, d_));
            return static_cast<const double*>(scratch.data());
          },
          m_, items.data(), count, d_, maxima.data());
    }
  }

  /// Projections <w_j, x> for every j.
  [[nodiscard]] std::vector<double> project(std::span<const double> x) const {
    if (x.size() != d_) throw dimension_error("project: vector has wrong dimension");
    std::vector<double> out(m_);
    std::vector<double> scratch;
    if (storage_ == projection_storage::on_the_fly) scratch.resize(d_);
    for (std::size_t j = 0; j < m_; ++j) {
      const double* w = nullptr;
      if (storage_ == projection_storage::materialized) {
        w = matrix_.data() + j * d_;
      } else {
        fill_row(j, scratch);
        w = scratch.data();
      }
      out[j] = detail::dot(w, x.data(), d_);
    }
    return out;
  }

private:
  projection_set(std::size_t d, std::size_t m, std::uint64_t seed, projection_storage storage)
      : d_(d), m_(m), seed_(seed), storage_(storage) {}

  std::size_t d_;
  std::size_t m_;
  std::uint64_t seed_;
  projection_storage storage_;
  std::vector<double> matrix_;
};

} // namespace maxsketch
