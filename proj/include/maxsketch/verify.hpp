#pragma once

// Monte Carlo and quadrature checks of the facts the estimator relies on:
//
//   perturbation   |E max_i <w, x~_i> - E max_r <w, x^(r)>| <= sqrt(2 eta ln n)
//   slepian        sqrt(1-rho) E[max_k Z] <= E max_r G'_r <= sqrt(1+rho) E[max_k Z]
//   concentration  S has sub-Gaussian fluctuations at scale 1/sqrt(m)
//   gap            E[max_{ceil((1+eps)k)} Z] - E[max_k Z] >= (c0/20) eps / sqrt(ln k)
//
// Every Monte Carlo assertion allows 4 standard errors of slack.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxsketch/detail/dot.hpp"
#include "maxsketch/detail/parallel.hpp"
#include "maxsketch/error.hpp"
#include "maxsketch/estimator.hpp"
#include "maxsketch/gaussian_max.hpp"
#include "maxsketch/rng.hpp"
#include "maxsketch/sketch.hpp"
#include "maxsketch/streamgen.hpp"

namespace maxsketch {

inline constexpr double mc_sigmas = 4.0;

struct mc_report {
  std::string name;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::uint64_t trials = 0;
  double bound_lo = -std::numeric_limits<double>::infinity();
  double bound_hi = std::numeric_limits<double>::infinity();
  bool pass = false;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();

  /// [estimate - 4 se, estimate + 4 se] intersects [bound_lo, bound_hi].
  [[nodiscard]] bool interval_intersects() const noexcept {
    return estimate + mc_sigmas * stderr_ >= bound_lo && estimate - mc_sigmas * stderr_ <= bound_hi;
  }

  /// Distance from the slack interval to the nearest violated bound; positive
  /// means inside.
  [[nodiscard]] double margin() const noexcept {
    const double lo = (estimate + mc_sigmas * stderr_) - bound_lo;
    const double hi = bound_hi - (estimate - mc_sigmas * stderr_);
    return std::min(lo, hi);
  }
};

[[nodiscard]] inline nlohmann::json to_json(const mc_report& r) {
  auto finite_or_null = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j = {
      {"name", r.name},
      {"estimate", r.estimate},
      {"stderr", r.stderr_},
      {"bound", {finite_or_null(r.bound_lo), finite_or_null(r.bound_hi)}},
      {"margin", finite_or_null(r.margin())},
      {"pass", r.pass},
      {"trials", r.trials},
      {"seed", r.seed},
  };
  for (const auto& [k, v] : r.extra.items()) j[k] = v;
  return j;
}

namespace detail {

struct running_stats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  [[nodiscard]] double variance() const noexcept { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  [[nodiscard]] double stderr_() const noexcept {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

// For each of `trials` Gaussian directions w_j (row j of seed), call
// sink(j, max_i <w_j, x_i>) over the row-major unit vectors `rows`.
template <class Sink>
void per_direction_max(std::span<const double> rows, std::size_t d, std::uint64_t trials, std::uint64_t seed,
                       Sink&& sink) {
  const std::size_t count = rows.size() / d;
  constexpr std::size_t chunk = 512;
  std::vector<double> dirs(chunk * d);
  std::vector<double> maxima(chunk);
  for (std::uint64_t j0 = 0; j0 < trials; j0 += chunk) {
    const auto c = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, trials - j0));
    for (std::size_t j = 0; j < c; ++j) fill_normal_row(seed, j0 + j, std::span<double>(dirs.data() + j * d, d));
    std::fill(maxima.begin(), maxima.end(), -std::numeric_limits<double>::infinity());
    const double* base = dirs.data();
    accumulate_max([base, d](std::size_t j, std::size_t) { return base + j * d; }, c, rows.data(), count, d, maxima.data());
    for (std::size_t j = 0; j < c; ++j) sink(j0 + j, maxima[j]);
  }
}

inline void require_trials(std::uint64_t trials, std::uint64_t minimum, const char* what) {
  if (trials < minimum) {
    throw invalid_parameter(std::string(what) + " needs at least " + std::to_string(minimum) + " trials");
  }
}

} // namespace detail

/// Sample mean and standard error of max_r <w, x^(r)> over `trials` Gaussian
/// directions. With `reference`, pass means the 4-sigma interval covers it.
[[nodiscard]] inline mc_report mc_expected_max(std::span<const double> vectors, std::size_t d, std::uint64_t trials,
                                               std::uint64_t seed, std::optional<double> reference = std::nullopt) {
  if (d == 0 || vectors.empty()) throw invalid_input("mc_expected_max needs at least one vector");
  if (vectors.size() % d != 0) throw invalid_input("mc_expected_max: vectors are not a multiple of d");
  detail::require_trials(trials, 1000, "mc_expected_max");
  detail::running_stats st;
  detail::per_direction_max(vectors, d, trials, seed, [&](std::uint64_t, double v) { st.add(v); });
  mc_report r{.name = "expected_max", .estimate = st.mean, .stderr_ = st.stderr_(), .trials = trials, .seed = seed};
  if (reference) {
    r.bound_lo = r.bound_hi = *reference;
    r.pass = r.interval_intersects();
  } else {
    r.pass = true;
  }
  r.extra["vectors"] = vectors.size() / d;
  return r;
}

/// Equicorrelated family G'_r = sqrt(1-rho) Z_r + sqrt(rho) Z against the
/// i.i.d. sandwich bounds.
[[nodiscard]] inline mc_report check_slepian(std::uint64_t k, double rho, std::uint64_t trials, std::uint64_t seed,
                                             const gaussian_max_table& table = gaussian_max_table::shared()) {
  if (k < 1) throw invalid_parameter("check_slepian needs k >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw invalid_parameter("check_slepian needs rho in [0, 1)");
  detail::require_trials(trials, 1000, "check_slepian");
  const double a = std::sqrt(1.0 - rho);
  const double b = std::sqrt(rho);
  counter_rng rng(derive_key(seed, 0x736c6570ULL));
  detail::running_stats st;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const double common = rng.normal();
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t r = 0; r < k; ++r) best = std::max(best, a * rng.normal() + b * common);
    st.add(best);
  }
  const double iid = table(k);
  mc_report r{.name = "slepian",
              .estimate = st.mean,
              .stderr_ = st.stderr_(),
              .trials = trials,
              .bound_lo = std::sqrt(1.0 - rho) * iid,
              .bound_hi = std::sqrt(1.0 + rho) * iid,
              .seed = seed};
  r.pass = r.interval_intersects();
  r.extra["k"] = k;
  r.extra["rho"] = rho;
  r.extra["expected_max_iid"] = iid;
  return r;
}

/// Difference of expected maxima over the stream and over its centers.
/// With `common_random_numbers`, both maxima use the same direction per
/// trial; otherwise the centers use an independent set of directions.
[[nodiscard]] inline mc_report check_perturbation(const generated_stream& stream, std::uint64_t trials,
                                                  std::uint64_t seed, bool common_random_numbers = true) {
  detail::require_trials(trials, 1000, "check_perturbation");
  const std::size_t d = stream.d();
  std::vector<double> stream_max(trials), center_max(trials);
  detail::per_direction_max(stream.vectors, d, trials, seed, [&](std::uint64_t j, double v) { stream_max[j] = v; });
  const std::uint64_t center_seed = common_random_numbers ? seed : derive_key(seed, 0x696e6470ULL);
  detail::per_direction_max(stream.centers.rows, d, trials, center_seed,
                            [&](std::uint64_t j, double v) { center_max[j] = v; });
  detail::running_stats diff, s_stats, c_stats;
  for (std::uint64_t j = 0; j < trials; ++j) {
    diff.add(stream_max[j] - center_max[j]);
    s_stats.add(stream_max[j]);
    c_stats.add(center_max[j]);
  }
  const double bound = std::sqrt(2.0 * stream.spec.eta * std::log(static_cast<double>(stream.n())));
  const double se = common_random_numbers ? diff.stderr_()
                                          : std::sqrt(s_stats.stderr_() * s_stats.stderr_() +
                                                      c_stats.stderr_() * c_stats.stderr_());
  const double est = common_random_numbers ? diff.mean : s_stats.mean - c_stats.mean;
  mc_report r{.name = "perturbation",
              .estimate = est,
              .stderr_ = se,
              .trials = trials,
              .bound_lo = -bound,
              .bound_hi = bound,
              .seed = seed};
  r.pass = r.interval_intersects();
  r.extra["stream_mean"] = s_stats.mean;
  r.extra["centers_mean"] = c_stats.mean;
  r.extra["max_abs_trial_difference"] = [&] {
    double worst = 0.0;
    for (std::uint64_t j = 0; j < trials; ++j) worst = std::max(worst, std::abs(stream_max[j] - center_max[j]));
    return worst;
  }();
  r.extra["common_random_numbers"] = common_random_numbers;
  r.extra["eta"] = stream.spec.eta;
  r.extra["n"] = stream.n();
  return r;
}

/// c0 = (1 - e^-1) / (2 e^2).
inline const double gap_c0 = (1.0 - std::exp(-1.0)) / (2.0 * std::exp(2.0));

/// ceil((1+eps) k) without the "at least k+1" floor used by the grid.
[[nodiscard]] inline std::uint64_t inflated_count(std::uint64_t k, double eps) noexcept {
  const double y = (1.0 + eps) * static_cast<double>(k);
  const double r = std::round(y);
  return static_cast<std::uint64_t>(std::abs(y - r) <= 1e-9 * y ? r : std::ceil(y));
}

/// Mean gap by quadrature: no Monte Carlo noise.
[[nodiscard]] inline mc_report check_gap(std::uint64_t k, double eps,
                                         const gaussian_max_table& table = gaussian_max_table::shared()) {
  if (k < 2) throw invalid_parameter("check_gap needs k >= 2");
  if (!(eps > 0.0 && eps <= 1.0)) throw invalid_parameter("check_gap needs eps in (0, 1]");
  const std::uint64_t k2 = inflated_count(k, eps);
  const double gap = k2 == k ? 0.0 : table(k2) - table(k);
  const double bound = gap_c0 / 20.0 * eps / std::sqrt(std::log(static_cast<double>(k)));
  mc_report r{.name = "gap", .estimate = gap, .stderr_ = 0.0, .trials = 0, .bound_lo = bound};
  const bool vacuous = k2 == k;
  r.pass = vacuous || gap >= bound;
  r.extra["k"] = k;
  r.extra["k_inflated"] = k2;
  r.extra["eps"] = eps;
  r.extra["vacuous"] = vacuous;
  r.extra["measured_constant"] = gap * std::sqrt(std::log(static_cast<double>(k))) / eps;
  return r;
}

/// Spread of S over `redraws` independent projection sets on a fixed
/// stream. Passes when the sample std is at most 1.5/sqrt(m) and the rate of
/// |S - mean| >= 3/sqrt(m) is at most 2 e^{-4.5} plus 4 binomial sigmas.
[[nodiscard]] inline mc_report check_concentration(std::span<const double> rows, std::size_t d, std::size_t m,
                                                   std::uint64_t redraws, std::uint64_t seed) {
  if (d == 0 || rows.empty() || rows.size() % d != 0) throw invalid_input("check_concentration needs a nonempty stream");
  if (m < 1) throw invalid_parameter("check_concentration needs m >= 1");
  detail::require_trials(redraws, 100, "check_concentration");
  std::vector<double> unit(rows.size());
  for (std::size_t i = 0; i < rows.size(); i += d) {
    normalize_into(rows.subspan(i, d), std::span<double>(unit.data() + i, d));
  }
  std::vector<double> stats(redraws);
  detail::parallel_for(redraws, [&](std::size_t r) {
    const auto proj = projection_set::create(d, m, derive_key(seed, r));
    auto state = sketch_state::empty_for(proj);
    update_batch(state, unit, unit.size() / d, proj);
    stats[r] = statistic(state);
  });
  detail::running_stats st;
  for (double s : stats) st.add(s);
  const double sd = std::sqrt(st.variance());
  const double t = 3.0 / std::sqrt(static_cast<double>(m));
  std::uint64_t exceed = 0;
  for (double s : stats) exceed += std::abs(s - st.mean) >= t ? 1 : 0;
  const double rate = static_cast<double>(exceed) / static_cast<double>(redraws);
  const double p0 = 2.0 * std::exp(-4.5);
  const double rate_bound = p0 + mc_sigmas * std::sqrt(p0 * (1.0 - p0) / static_cast<double>(redraws));
  mc_report r{.name = "concentration",
              .estimate = sd,
              .stderr_ = sd / std::sqrt(2.0 * static_cast<double>(redraws - 1)),
              .trials = redraws,
              .bound_lo = 0.0,
              .bound_hi = 1.5 / std::sqrt(static_cast<double>(m)),
              .seed = seed};
  r.pass = sd <= r.bound_hi && rate <= rate_bound;
  r.extra["m"] = m;
  r.extra["mean_statistic"] = st.mean;
  r.extra["exceedance_rate"] = rate;
  r.extra["exceedance_bound"] = rate_bound;
  r.extra["t"] = t;
  return r;
}

} // namespace maxsketch
