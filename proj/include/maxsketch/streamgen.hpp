#pragma once

// Synthetic (eta, rho)-clusterable streams with known ground truth, and a
// validator for labeled streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxsketch/detail/dot.hpp"
#include "maxsketch/error.hpp"
#include "maxsketch/rng.hpp"

namespace maxsketch {

enum class center_mode { orthonormal, rejection };

[[nodiscard]] inline const char* to_string(center_mode m) noexcept {
  return m == center_mode::orthonormal ? "orthonormal" : "rejection";
}

[[nodiscard]] inline center_mode parse_center_mode(const std::string& s) {
  if (s == "orthonormal") return center_mode::orthonormal;
  if (s == "rejection") return center_mode::rejection;
  throw invalid_parameter("unknown center mode '" + s + "' (expected orthonormal or rejection)");
}

struct cluster_spec {
  std::size_t k_star = 2;
  std::size_t d = 2;
  double eta = 0.0;
  double rho = 0.0;
  center_mode centers = center_mode::orthonormal;
  std::size_t max_retries = 1000; ///< rejection mode only

  void validate() const {
    if (k_star < 2) throw invalid_parameter("cluster spec needs k* >= 2");
    if (d < 1) throw invalid_parameter("cluster spec needs d >= 1");
    if (!(eta >= 0.0 && eta < 1.0)) throw invalid_parameter("cluster spec needs eta in [0, 1)");
    if (!(rho >= 0.0 && rho < 1.0)) throw invalid_parameter("cluster spec needs rho in [0, 1)");
    if (centers == center_mode::orthonormal && k_star > d) {
      throw invalid_parameter("orthonormal centers need k* <= d (got k*=" + std::to_string(k_star) +
                              ", d=" + std::to_string(d) + ")");
    }
  }
};

/// k* unit rows of dimension d.
struct latent_centers {
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<double> rows;
  double realized_rho = 0.0; ///< max off-diagonal |<c_a, c_b>|

  [[nodiscard]] std::span<const double> center(std::size_t r) const { return {rows.data() + r * d, d}; }
};

namespace detail {

inline double norm2(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double max_abs_cross(const std::vector<double>& rows, std::size_t k, std::size_t d) noexcept {
  double worst = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      worst = std::max(worst, std::abs(dot(rows.data() + a * d, rows.data() + b * d, d)));
    }
  }
  return worst;
}

// Remove from v its components along the first `count` rows of `basis`.
inline void project_out(std::span<double> v, const double* basis, std::size_t count, std::size_t d) noexcept {
  for (std::size_t r = 0; r < count; ++r) {
    const double* b = basis + r * d;
    const double c = dot(b, v.data(), d);
    for (std::size_t i = 0; i < d; ++i) v[i] -= c * b[i];
  }
}

} // namespace detail

[[nodiscard]] inline latent_centers make_centers(const cluster_spec& spec, std::uint64_t seed) {
  spec.validate();
  latent_centers out;
  out.k = spec.k_star;
  out.d = spec.d;
  out.rows.assign(spec.k_star * spec.d, 0.0);
  counter_rng rng(derive_key(seed, 0x63656e74ULL));
  const std::size_t d = spec.d;

  if (spec.centers == center_mode::orthonormal) {
    std::vector<double> v(d);
    for (std::size_t r = 0; r < spec.k_star; ++r) {
      double norm = 0.0;
      // Gram-Schmidt, applied twice; re-draw on near-dependence.
      do {
        rng.fill_normal(v);
        const double before = detail::norm2(v);
        detail::project_out(v, out.rows.data(), r, d);
        detail::project_out(v, out.rows.data(), r, d);
        norm = detail::norm2(v);
        if (norm < 1e-6 * before) norm = 0.0;
      } while (norm == 0.0);
      for (std::size_t i = 0; i < d; ++i) out.rows[r * d + i] = v[i] / norm;
    }
    out.realized_rho = detail::max_abs_cross(out.rows, out.k, d);
    return out;
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, spec.max_retries); ++attempt) {
    for (std::size_t r = 0; r < spec.k_star; ++r) {
      std::span<double> row(out.rows.data() + r * d, d);
      double norm = 0.0;
      do {
        rng.fill_normal(row);
        norm = detail::norm2(row);
      } while (norm == 0.0);
      for (double& x : row) x /= norm;
    }
    const double cross = detail::max_abs_cross(out.rows, out.k, d);
    best = std::min(best, cross);
    if (cross <= spec.rho) {
      out.realized_rho = cross;
      return out;
    }
  }
  throw generation_failure("could not draw " + std::to_string(spec.k_star) + " centers in d=" + std::to_string(d) +
                               " with pairwise |<.,.>| <= " + std::to_string(spec.rho) + " after " +
                               std::to_string(spec.max_retries) + " attempts; best achieved rho ~ " +
                               std::to_string(best),
                           best);
}

/// Cap sample around `center`: u uniform on [1 - eta/2, 1], v uniform on the
/// unit sphere orthogonal to `center`, x = u center + sqrt(1 - u^2) v.
inline void sample_observation(std::span<const double> center, double eta, counter_rng& rng, std::span<double> out) {
  const std::size_t d = center.size();
  if (out.size() != d) throw dimension_error("sample_observation: output dimension mismatch");
  if (!(eta >= 0.0 && eta < 1.0)) throw invalid_parameter("sample_observation needs eta in [0, 1)");
  const double u = 1.0 - 0.5 * eta * rng.uniform();
  double tnorm = 0.0;
  for (int tries = 0; tries < 64 && tnorm == 0.0; ++tries) {
    rng.fill_normal(out);
    detail::project_out(out, center.data(), 1, d);
    tnorm = detail::norm2(out);
    if (tnorm < 1e-12) tnorm = 0.0;
  }
  const double t = tnorm > 0.0 ? std::sqrt(std::max(0.0, 1.0 - u * u)) / tnorm : 0.0;
  for (std::size_t i = 0; i < d; ++i) out[i] = u * center[i] + t * out[i];
}

[[nodiscard]] inline std::vector<double> sample_observation(std::span<const double> center, double eta,
                                                            counter_rng& rng) {
  std::vector<double> out(center.size());
  sample_observation(center, eta, rng, out);
  return out;
}

struct generated_stream {
  cluster_spec spec;
  std::uint64_t seed = 0;
  latent_centers centers;
  std::vector<double> vectors;           ///< n x d, row-major
  std::vector<std::uint32_t> assignment; ///< center index of each item

  [[nodiscard]] std::size_t n() const noexcept { return assignment.size(); }
  [[nodiscard]] std::size_t d() const noexcept { return spec.d; }
  [[nodiscard]] std::span<const double> item(std::size_t i) const { return {vectors.data() + i * spec.d, spec.d}; }
};

/// The first k* items visit each center once; the rest pick a center
/// uniformly. Deterministic in (spec, n, seed).
[[nodiscard]] inline generated_stream generate_stream(const cluster_spec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < spec.k_star) {
    throw invalid_parameter("stream length n=" + std::to_string(n) + " is below k*=" + std::to_string(spec.k_star));
  }
  generated_stream s;
  s.spec = spec;
  s.seed = seed;
  s.centers = make_centers(spec, seed);
  s.vectors.resize(n * spec.d);
  s.assignment.resize(n);
  counter_rng pick(derive_key(seed, 0x61737367ULL));
  counter_rng noise(derive_key(seed, 0x6e6f6973ULL));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = i < spec.k_star ? i : static_cast<std::size_t>(pick.below(spec.k_star));
    s.assignment[i] = static_cast<std::uint32_t>(r);
    sample_observation(s.centers.center(r), spec.eta, noise, std::span<double>(s.vectors.data() + i * spec.d, spec.d));
  }
  return s;
}

struct clusterable_report {
  double min_alignment = 1.0;  ///< min_i <x_i, center_{r(i)}>
  double max_cross = 0.0;      ///< max_{a != b} |<c_a, c_b>|
  double eta_hat = 0.0;        ///< 2 (1 - min_alignment)
  double rho_hat = 0.0;        ///< max_cross
  std::size_t centers_used = 0;
  bool pass = false;
};

/// Check a labeled stream against the (eta, rho)-clusterable definition.
/// `tol` absorbs rounding in the inner products.
[[nodiscard]] inline clusterable_report validate_clusterable(std::span<const double> vectors,
                                                             std::span<const std::uint32_t> assignment,
                                                             const latent_centers& centers, double eta, double rho,
                                                             double tol = 1e-9) {
  const std::size_t d = centers.d;
  if (d == 0 || centers.rows.size() != centers.k * d) throw invalid_input("validate_clusterable: malformed centers");
  if (vectors.size() != assignment.size() * d) {
    throw invalid_input("validate_clusterable: vectors are not n x d for the assignment length");
  }
  clusterable_report rep;
  std::vector<bool> used(centers.k, false);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const auto r = assignment[i];
    if (r >= centers.k) throw invalid_input("validate_clusterable: assignment index out of range at item " + std::to_string(i));
    used[r] = true;
    rep.min_alignment = std::min(rep.min_alignment, detail::dot(vectors.data() + i * d, centers.rows.data() + r * d, d));
  }
  rep.centers_used = static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
  rep.max_cross = detail::max_abs_cross(centers.rows, centers.k, d);
  rep.eta_hat = std::max(0.0, 2.0 * (1.0 - rep.min_alignment));
  rep.rho_hat = rep.max_cross;
  rep.pass = rep.min_alignment >= 1.0 - eta / 2.0 - tol && rep.max_cross <= rho + tol;
  return rep;
}

[[nodiscard]] inline clusterable_report validate_clusterable(const generated_stream& s) {
  return validate_clusterable(s.vectors, s.assignment, s.centers, s.spec.eta, s.spec.rho);
}

/// Ground-truth sidecar: "index,center_id" rows.
inline void write_truth_csv(std::ostream& out, const generated_stream& s) {
  out << "index,center_id\n";
  for (std::size_t i = 0; i < s.n(); ++i) out << i << ',' << s.assignment[i] << '\n';
}

[[nodiscard]] inline nlohmann::json truth_header(const generated_stream& s) {
  const auto rep = validate_clusterable(s);
  return {
      {"spec",
       {{"k_star", s.spec.k_star},
        {"d", s.spec.d},
        {"eta", s.spec.eta},
        {"rho", s.spec.rho},
        {"center_mode", to_string(s.spec.centers)}}},
      {"n", s.n()},
      {"seed", s.seed},
      {"realized_rho", s.centers.realized_rho},
      {"eta_hat", rep.eta_hat},
      {"rho_hat", rep.rho_hat},
      {"valid", rep.pass},
  };
}

} // namespace maxsketch
