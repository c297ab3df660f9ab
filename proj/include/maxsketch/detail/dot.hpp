#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#if defined(__AVX512F__) || (defined(__AVX2__) && defined(__FMA__))
#include <immintrin.h>
#endif

namespace maxsketch::detail {

inline constexpr std::size_t dot_lanes = 8;

// Dot products of one row `w` against N vectors. Each product accumulates
// coordinate i into lane i % 8 with std::fma, then reduces the lanes with a
// fixed tree. The arithmetic per (w, x) pair is identical for every N, so a
// vector's projection does not depend on which batch slot it occupies.
namespace simd {

// Eight fused multiply-add lanes. Every backend rounds each lane exactly as
// std::fma does, so results are identical across backends.
#if defined(__AVX512F__)
struct lanes {
  __m512d v;
  static lanes zero() noexcept { return {_mm512_setzero_pd()}; }
  static lanes load(const double* p) noexcept { return {_mm512_loadu_pd(p)}; }
  void fma(lanes a, lanes b) noexcept { v = _mm512_fmadd_pd(a.v, b.v, v); }
  void store(double* p) const noexcept { _mm512_storeu_pd(p, v); }
};
#elif defined(__AVX2__) && defined(__FMA__)
struct lanes {
  __m256d lo, hi;
  static lanes zero() noexcept { return {_mm256_setzero_pd(), _mm256_setzero_pd()}; }
  static lanes load(const double* p) noexcept { return {_mm256_loadu_pd(p), _mm256_loadu_pd(p + 4)}; }
  void fma(lanes a, lanes b) noexcept {
    lo = _mm256_fmadd_pd(a.lo, b.lo, lo);
    hi = _mm256_fmadd_pd(a.hi, b.hi, hi);
  }
  void store(double* p) const noexcept {
    _mm256_storeu_pd(p, lo);
    _mm256_storeu_pd(p + 4, hi);
  }
};
#else
struct lanes {
  std::array<double, dot_lanes> v;
  static lanes zero() noexcept { return {}; }
  static lanes load(const double* p) noexcept {
    lanes r;
    for (std::size_t l = 0; l < dot_lanes; ++l) r.v[l] = p[l];
    return r;
  }
  void fma(lanes a, lanes b) noexcept {
    for (std::size_t l = 0; l < dot_lanes; ++l) v[l] = std::fma(a.v[l], b.v[l], v[l]);
  }
  void store(double* p) const noexcept {
    for (std::size_t l = 0; l < dot_lanes; ++l) p[l] = v[l];
  }
};
#endif

} // namespace simd

// Dot products of one row `w` against N vectors. Each product accumulates
// coordinate i into lane i % 8 with a fused multiply-add, then reduces the
// lanes with a fixed tree. The arithmetic per (w, x) pair is identical for
// every N, so a vector's projection does not depend on which batch slot it
// occupies.
template <std::size_t N>
inline void dot_n(const double* w, const double* const* xs, std::size_t d, double* out) noexcept {
  simd::lanes acc[N];
  for (std::size_t q = 0; q < N; ++q) acc[q] = simd::lanes::zero();
  std::size_t i = 0;
  for (; i + dot_lanes <= d; i += dot_lanes) {
    const auto wv = simd::lanes::load(w + i);
    for (std::size_t q = 0; q < N; ++q) acc[q].fma(wv, simd::lanes::load(xs[q] + i));
  }
  for (std::size_t q = 0; q < N; ++q) {
    alignas(64) double a[dot_lanes];
    acc[q].store(a);
    for (std::size_t l = 0; i + l < d; ++l) a[l] = std::fma(w[i + l], xs[q][i + l], a[l]);
    out[q] = ((a[0] + a[4]) + (a[1] + a[5])) + ((a[2] + a[6]) + (a[3] + a[7]));
  }
}

inline double dot(const double* w, const double* x, std::size_t d) noexcept {
  double out = 0.0;
  const double* xs[1] = {x};
  dot_n<1>(w, xs, d, &out);
  return out;
}

// Tile of R rows against N vectors; out[r * N + q] = <ws[r], xs[q]>.
// Per pair the arithmetic matches dot_n.
template <std::size_t R, std::size_t N>
inline void dot_tile(const double* const* ws, const double* const* xs, std::size_t d, double* out) noexcept {
  simd::lanes acc[R][N];
  for (auto& row : acc)
    for (auto& a : row) a = simd::lanes::zero();
  std::size_t i = 0;
  for (; i + dot_lanes <= d; i += dot_lanes) {
    simd::lanes xv[N];
#pragma GCC unroll 8
    for (std::size_t q = 0; q < N; ++q) xv[q] = simd::lanes::load(xs[q] + i);
#pragma GCC unroll 8
    for (std::size_t r = 0; r < R; ++r) {
      const auto wv = simd::lanes::load(ws[r] + i);
#pragma GCC unroll 8
      for (std::size_t q = 0; q < N; ++q) acc[r][q].fma(wv, xv[q]);
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t q = 0; q < N; ++q) {
      alignas(64) double a[dot_lanes];
      acc[r][q].store(a);
      for (std::size_t l = 0; i + l < d; ++l) a[l] = std::fma(ws[r][i + l], xs[q][i + l], a[l]);
      out[r * N + q] = ((a[0] + a[4]) + (a[1] + a[5])) + ((a[2] + a[6]) + (a[3] + a[7]));
    }
  }
}

inline constexpr std::size_t tile_rows = 4;

/// maxima[j] = max(maxima[j], max_i <row_j, item_i>) for `count` row-major
/// items of dimension d. `rows_of(j, r)` returns r contiguous rows starting at
/// row j (r <= tile_rows).
template <class RowsFn>
inline void accumulate_max(RowsFn&& rows_of, std::size_t m, const double* items, std::size_t count, std::size_t d,
                           double* maxima) {
  constexpr std::size_t group = 4;
  constexpr std::size_t block = 64;
  for (std::size_t b0 = 0; b0 < count; b0 += block) {
    const std::size_t b1 = std::min(count, b0 + block);
    std::size_t j = 0;
    for (; j + tile_rows <= m; j += tile_rows) {
      const double* base = rows_of(j, tile_rows);
      const double* ws[tile_rows];
      for (std::size_t r = 0; r < tile_rows; ++r) ws[r] = base + r * d;
      double best[tile_rows];
      for (std::size_t r = 0; r < tile_rows; ++r) best[r] = maxima[j + r];
      std::size_t i = b0;
      for (; i + group <= b1; i += group) {
        const double* xs[group];
        for (std::size_t q = 0; q < group; ++q) xs[q] = items + (i + q) * d;
        double out[tile_rows * group];
        dot_tile<tile_rows, group>(ws, xs, d, out);
        for (std::size_t r = 0; r < tile_rows; ++r)
          for (std::size_t q = 0; q < group; ++q) best[r] = std::max(best[r], out[r * group + q]);
      }
      for (; i < b1; ++i) {
        for (std::size_t r = 0; r < tile_rows; ++r) best[r] = std::max(best[r], dot(ws[r], items + i * d, d));
      }
      for (std::size_t r = 0; r < tile_rows; ++r) maxima[j + r] = best[r];
    }
    for (; j < m; ++j) {
      const double* w = rows_of(j, 1);
      double best = maxima[j];
      for (std::size_t i = b0; i < b1; ++i) best = std::max(best, dot(w, items + i * d, d));
      maxima[j] = best;
    }
  }
}

} // namespace maxsketch::detail
