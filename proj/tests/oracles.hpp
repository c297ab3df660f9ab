#pragma once

// Independent reference computations used by the tests. Nothing here shares
// code paths with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace oracle {

/// Left-to-right dot product in long double.
inline double naive_dot(const double* a, const double* b, std::size_t d) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < d; ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

/// Mean and standard error of the max of k i.i.d. standard normals, sampled
/// by inversion: max = Phi^{-1}(U^{1/k}).
inline std::pair<double, double> mc_max_of_normals(std::uint64_t k, std::uint64_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const boost::math::normal_distribution<double> nd;
  const double inv_k = 1.0 / static_cast<double>(k);
  long double sum = 0.0L, sq = 0.0L;
  for (std::uint64_t i = 0; i < samples; ++i) {
    double u = unif(gen);
    while (u <= 0.0) u = unif(gen);
    // 1 - u^{1/k}, computed without cancellation.
    const double q = -std::expm1(std::log(u) * inv_k);
    double z = 0.0;
    if (q <= 0.0) {
      z = boost::math::quantile(nd, std::nextafter(1.0, 0.0));
    } else if (q < 0.5) {
      z = boost::math::quantile(boost::math::complement(nd, q));
    } else {
      z = boost::math::quantile(nd, 1.0 - q);
    }
    sum += z;
    sq += static_cast<long double>(z) * z;
  }
  const auto n = static_cast<long double>(samples);
  const long double mean = sum / n;
  const long double var = (sq - n * mean * mean) / (n - 1);
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / n))};
}

/// Least-squares monotone fit by exhaustive search: every split of the
/// sorted points into consecutive blocks, blocks fitted by their means,
/// keeping partitions whose means are nondecreasing. Points with equal x
/// are forced into the same block so the fit is a function of x.
inline double brute_force_isotonic_sse(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  const std::size_t n = pts.size();
  if (n == 0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t masks = 1u << (n - 1);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    // bit i set: a block boundary between point i and i+1
    bool ok = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if ((mask >> i & 1u) && pts[i].first == pts[i + 1].first) ok = false;
    }
    if (!ok) continue;
    double sse = 0.0;
    double prev_mean = -std::numeric_limits<double>::infinity();
    std::size_t start = 0;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (i + 1 == n || (mask >> i & 1u)) {
        double mean = 0.0;
        for (std::size_t j = start; j <= i; ++j) mean += pts[j].second;
        mean /= static_cast<double>(i - start + 1);
        if (mean < prev_mean) ok = false;
        for (std::size_t j = start; j <= i; ++j) sse += (pts[j].second - mean) * (pts[j].second - mean);
        prev_mean = mean;
        start = i + 1;
      }
    }
    if (ok) best = std::min(best, sse);
  }
  return best;
}

} // namespace oracle
