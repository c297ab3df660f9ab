#pragma once

// Monotone readouts from the sketch statistic S to a count.
//
// Both kinds are step functions: with breakpoints b_0 < ... < b_{T-1} and
// levels v_0 <= ... <= v_T,
//
//   f(s) = v_0        for s < b_0
//   f(s) = v_{t+1}    for b_t <= s < b_{t+1}   (closed on the left)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "maxsketch/error.hpp"
#include "maxsketch/estimator.hpp"

namespace maxsketch {

struct calibration_sample {
  double s = 0.0;       ///< sketch statistic S(X)
  std::uint64_t k = 1;  ///< true distinct count
};

enum class readout_kind { threshold_grid, isotonic };

[[nodiscard]] inline const char* to_string(readout_kind k) noexcept {
  return k == readout_kind::isotonic ? "isotonic" : "threshold-grid";
}

[[nodiscard]] inline readout_kind parse_readout_kind(const std::string& s) {
  if (s == "isotonic") return readout_kind::isotonic;
  if (s == "threshold-grid" || s == "threshold") return readout_kind::threshold_grid;
  throw invalid_parameter("unknown readout kind '" + s + "' (expected isotonic or threshold-grid)");
}

class monotone_step_fn {
public:
  monotone_step_fn(readout_kind kind, std::vector<double> breakpoints, std::vector<double> levels, double eps = 0.0)
      : kind_(kind), breakpoints_(std::move(breakpoints)), levels_(std::move(levels)), eps_(eps) {
    if (levels_.size() != breakpoints_.size() + 1) {
      throw invalid_input("step function needs exactly one more level than breakpoints");
    }
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      if (!std::isfinite(breakpoints_[i])) throw invalid_input("step function breakpoints must be finite");
      if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1])) {
        throw invalid_input("step function breakpoints must be strictly increasing");
      }
    }
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (!std::isfinite(levels_[i])) throw invalid_input("step function levels must be finite");
      if (i > 0 && levels_[i] < levels_[i - 1]) throw invalid_input("step function levels must be nondecreasing");
    }
  }

  [[nodiscard]] readout_kind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  [[nodiscard]] const std::vector<double>& levels() const noexcept { return levels_; }
  [[nodiscard]] double eps() const noexcept { return eps_; }

  /// Raw step value at s.
  [[nodiscard]] double evaluate(double s) const {
    if (std::isnan(s)) throw invalid_input("readout: statistic is NaN");
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), s);
    return levels_[static_cast<std::size_t>(it - breakpoints_.begin())];
  }

  friend bool operator==(const monotone_step_fn&, const monotone_step_fn&) = default;

private:
  readout_kind kind_;
  std::vector<double> breakpoints_;
  std::vector<double> levels_;
  double eps_;
};

/// Count predicted at s. Threshold-grid levels are returned as-is; isotonic
/// values are rounded to the nearest integer and floored at 1.
[[nodiscard]] inline std::uint64_t apply(const monotone_step_fn& fn, double s) {
  const double v = fn.evaluate(s);
  if (fn.kind() == readout_kind::threshold_grid) return static_cast<std::uint64_t>(v);
  return static_cast<std::uint64_t>(std::max(1.0, std::round(v)));
}

namespace detail {

struct pav_block {
  double lo_s, hi_s; // s range covered
  double sum, weight;
  [[nodiscard]] double mean() const noexcept { return sum / weight; }
};

// Sort by s and collapse equal-s groups into weighted blocks.
inline std::vector<pav_block> tie_groups(std::span<const calibration_sample> samples) {
  std::vector<calibration_sample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
  std::vector<pav_block> out;
  for (const auto& x : sorted) {
    const double k = static_cast<double>(x.k);
    if (!out.empty() && out.back().hi_s == x.s) {
      out.back().sum += k;
      out.back().weight += 1.0;
    } else {
      out.push_back({x.s, x.s, k, 1.0});
    }
  }
  return out;
}

inline double step_between(double left, double right, double prev) {
  double b = std::midpoint(left, right);
  if (b <= left && right > left) b = right;
  if (b <= prev) b = std::nextafter(prev, std::numeric_limits<double>::infinity());
  return b;
}

inline void check_samples(std::span<const calibration_sample> samples) {
  if (samples.empty()) throw invalid_input("calibration needs at least one sample");
  for (const auto& x : samples) {
    if (!std::isfinite(x.s)) throw invalid_input("calibration sample has a non-finite statistic");
    if (x.k < 1) throw invalid_input("calibration sample has k < 1");
  }
}

} // namespace detail

/// Least-squares isotonic fit of k on s by pool-adjacent-violators. Equal s
/// values are averaged first. Each step sits midway between the last s of one
/// block and the first s of the next.
[[nodiscard]] inline monotone_step_fn pav_fit(std::span<const calibration_sample> samples) {
  detail::check_samples(samples);
  std::vector<detail::pav_block> stack;
  for (const auto& g : detail::tie_groups(samples)) {
    stack.push_back(g);
    while (stack.size() > 1 && stack[stack.size() - 2].mean() >= stack.back().mean()) {
      auto top = stack.back();
      stack.pop_back();
      auto& below = stack.back();
      below.hi_s = top.hi_s;
      below.sum += top.sum;
      below.weight += top.weight;
    }
  }
  std::vector<double> breakpoints;
  std::vector<double> levels{stack.front().mean()};
  for (std::size_t i = 1; i < stack.size(); ++i) {
    const double prev = breakpoints.empty() ? -std::numeric_limits<double>::infinity() : breakpoints.back();
    breakpoints.push_back(detail::step_between(stack[i - 1].hi_s, stack[i].lo_s, prev));
    levels.push_back(stack[i].mean());
  }
  return monotone_step_fn(readout_kind::isotonic, std::move(breakpoints), std::move(levels));
}

/// Fitted values of pav_fit at each sample, in input order.
[[nodiscard]] inline std::vector<double> pav_predictions(const monotone_step_fn& fn,
                                                         std::span<const calibration_sample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back(fn.evaluate(x.s));
  return out;
}

/// One-dimensional empirical-risk split between `below` and `above`
/// statistics. Candidates are midpoints of consecutive distinct sorted
/// values; ties in error go to the smallest candidate. Returns the threshold
/// and its training error count.
[[nodiscard]] inline std::pair<double, std::size_t> best_split(std::vector<double> below, std::vector<double> above) {
  std::sort(below.begin(), below.end());
  std::sort(above.begin(), above.end());
  std::vector<double> all;
  all.reserve(below.size() + above.size());
  std::merge(below.begin(), below.end(), above.begin(), above.end(), std::back_inserter(all));
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (all.size() == 1) {
    // Single distinct value: place the split just above it so "below" wins.
    const double tau = std::nextafter(all.front(), std::numeric_limits<double>::infinity());
    return {tau, above.size()};
  }
  double best_tau = 0.0;
  std::size_t best_err = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    const double tau = std::midpoint(all[i], all[i + 1]);
    // errors: below samples at or above tau, above samples under tau
    const auto below_hi = static_cast<std::size_t>(below.end() - std::lower_bound(below.begin(), below.end(), tau));
    const auto above_lo = static_cast<std::size_t>(std::lower_bound(above.begin(), above.end(), tau) - above.begin());
    const std::size_t err = below_hi + above_lo;
    if (err < best_err) {
      best_err = err;
      best_tau = tau;
    }
  }
  return {best_tau, best_err};
}

/// Threshold-grid readout. Levels L_0 = 1, L_{t+1} = ceil((1+eps) L_t) up to
/// the largest k; for every transition with samples on both sides, tau_t
/// separates k <= L_t from k >= L_{t+1}. Crossing thresholds are pushed up
/// to restore strict order.
[[nodiscard]] inline monotone_step_fn learn_thresholds(std::span<const calibration_sample> samples, double eps) {
  detail::check_samples(samples);
  if (!(eps > 0.0)) throw invalid_parameter("learn_thresholds needs eps > 0");
  const auto [min_it, max_it] =
      std::minmax_element(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  if (min_it->k == max_it->k) throw invalid_input("learn_thresholds: all samples share one count");
  std::vector<std::uint64_t> levels{1};
  while (levels.back() < max_it->k) levels.push_back(next_geometric_level(levels.back(), eps));
  std::vector<double> breakpoints;
  std::vector<double> out_levels;
  for (std::size_t t = 0; t + 1 < levels.size() && levels[t] < max_it->k; ++t) {
    std::vector<double> below, above;
    for (const auto& x : samples) {
      if (x.k <= levels[t]) below.push_back(x.s);
      else if (x.k >= levels[t + 1]) above.push_back(x.s);
    }
    if (below.empty() || above.empty()) continue;
    double tau = best_split(std::move(below), std::move(above)).first;
    if (!breakpoints.empty() && tau <= breakpoints.back()) {
      tau = std::nextafter(breakpoints.back(), std::numeric_limits<double>::infinity());
    }
    if (out_levels.empty()) out_levels.push_back(static_cast<double>(levels[t]));
    breakpoints.push_back(tau);
    out_levels.push_back(static_cast<double>(levels[t + 1]));
  }
  if (breakpoints.empty()) throw invalid_input("learn_thresholds: samples span fewer than two levels");
  return monotone_step_fn(readout_kind::threshold_grid, std::move(breakpoints), std::move(out_levels), eps);
}

/// Readout JSON: {kind, breakpoints[], levels[], eps}, plus any `extra` keys.
[[nodiscard]] inline nlohmann::json to_json(const monotone_step_fn& fn, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j = std::move(extra);
  j["kind"] = to_string(fn.kind());
  j["breakpoints"] = fn.breakpoints();
  j["levels"] = fn.levels();
  j["eps"] = fn.eps();
  return j;
}

[[nodiscard]] inline monotone_step_fn readout_from_json(const nlohmann::json& j) {
  try {
    return monotone_step_fn(parse_readout_kind(j.at("kind").get<std::string>()),
                            j.at("breakpoints").get<std::vector<double>>(), j.at("levels").get<std::vector<double>>(),
                            j.value("eps", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("readout json: ") + e.what());
  } catch (const invalid_input& e) {
    throw format_error(std::string("readout json: ") + e.what());
  } catch (const invalid_parameter& e) {
    throw format_error(std::string("readout json: ") + e.what());
  }
}

} // namespace maxsketch
