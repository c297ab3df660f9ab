#pragma once

// Expected maximum of k i.i.d. standard normals,
//
//   E[max_{r<=k} Z_r] = integral of z * k * phi(z) * Phi(z)^(k-1) dz,
//
// by globally adaptive Gauss-Kronrod (7/15) quadrature on [-12, 12]. The
// density of the maximum is evaluated in log space so that Phi^(k-1) does not
// underflow for large k.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <shared_mutex>
#include <string>
#include <vector>

#include "maxsketch/error.hpp"

namespace maxsketch {

[[nodiscard]] inline double normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

[[nodiscard]] inline double normal_log_pdf(double z) noexcept {
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
}

[[nodiscard]] inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// log Phi(z), accurate in both tails.
[[nodiscard]] inline double normal_log_cdf(double z) noexcept {
  if (z < 0.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
}

struct quadrature_result {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t intervals = 0;
};

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss weights.
inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_w = {0.129484966168869693270611432679082,
                                                  0.279705391489276667901467771423780,
                                                  0.381830050505118944950369775488975,
                                                  0.417959183673469387755102040816327};

struct gk_segment {
  double a, b, value, error;
  friend bool operator<(const gk_segment& l, const gk_segment& r) noexcept { return l.error < r.error; }
};

template <class F>
gk_segment gauss_kronrod_15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kronrod_w[7];
  double gauss = fc * gauss_w[3];
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = h * kronrod_x[i];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kronrod_w[i] * s;
    if (i % 2 == 1) gauss += gauss_w[i / 2] * s;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

} // namespace detail

/// Globally adaptive G7-K15: bisect the segment with the largest error
/// estimate until the summed estimate is below `tol`. The initial partition
/// has `pieces` equal segments.
template <class F>
[[nodiscard]] quadrature_result integrate_adaptive(const F& f, double a, double b, double tol,
                                                   std::size_t pieces = 24, std::size_t max_segments = 20000) {
  if (!(tol > 0.0)) throw invalid_parameter("quadrature tolerance must be positive");
  std::priority_queue<detail::gk_segment> heap;
  double value = 0.0;
  double err = 0.0;
  const double step = (b - a) / static_cast<double>(pieces);
  for (std::size_t i = 0; i < pieces; ++i) {
    const double lo = a + step * static_cast<double>(i);
    const double hi = (i + 1 == pieces) ? b : lo + step;
    auto seg = detail::gauss_kronrod_15(f, lo, hi);
    value += seg.value;
    err += seg.error;
    heap.push(seg);
  }
  while (err > tol && heap.size() < max_segments) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the leaves so the running update does not leak rounding.
  double total = 0.0;
  double total_err = 0.0;
  const std::size_t count = heap.size();
  std::vector<detail::gk_segment> leaves;
  leaves.reserve(count);
  while (!heap.empty()) {
    leaves.push_back(heap.top());
    heap.pop();
  }
  std::sort(leaves.begin(), leaves.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
  for (const auto& s : leaves) {
    total += s.value;
    total_err += s.error;
  }
  return {total, total_err, count};
}

inline constexpr double default_quadrature_tol = 1e-9;

/// Density of the maximum of k i.i.d. standard normals.
[[nodiscard]] inline double max_density(double z, std::uint64_t k) noexcept {
  if (k == 1) return normal_pdf(z);
  const double log_dens =
      std::log(static_cast<double>(k)) + normal_log_pdf(z) + static_cast<double>(k - 1) * normal_log_cdf(z);
  return std::exp(log_dens);
}

/// E[max of k i.i.d. N(0,1)]. Exactly 0 for k = 1.
[[nodiscard]] inline double expected_max_iid(std::uint64_t k, double tol = default_quadrature_tol) {
  if (k == 0) throw invalid_parameter("expected_max_iid needs k >= 1");
  if (!(tol > 0.0)) throw invalid_parameter("expected_max_iid needs tol > 0");
  if (k == 1) return 0.0;
  return integrate_adaptive([k](double z) { return z * max_density(z, k); }, -12.0, 12.0, tol).value;
}

/// Memoized expected_max_iid at a fixed tolerance. Lookups take a shared
/// lock; misses compute outside the lock and insert under an exclusive one.
class gaussian_max_table {
public:
  explicit gaussian_max_table(double tol = default_quadrature_tol) : tol_(tol) {
    if (!(tol > 0.0)) throw invalid_parameter("gaussian_max_table needs tol > 0");
  }

  gaussian_max_table(const gaussian_max_table& other) : tol_(other.tol_) {
    std::shared_lock lock(other.mutex_);
    entries_ = other.entries_;
  }

  [[nodiscard]] double operator()(std::uint64_t k) const {
    {
      std::shared_lock lock(mutex_);
      if (auto it = entries_.find(k); it != entries_.end()) return it->second;
    }
    const double v = expected_max_iid(k, tol_);
    std::unique_lock lock(mutex_);
    return entries_.emplace(k, v).first->second;
  }

  [[nodiscard]] double tol() const noexcept { return tol_; }

  [[nodiscard]] std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

  /// Process-wide table at the default tolerance.
  [[nodiscard]] static const gaussian_max_table& shared() {
    static const gaussian_max_table table;
    return table;
  }

private:
  double tol_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::uint64_t, double> entries_;
};

} // namespace maxsketch
