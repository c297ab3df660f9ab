#pragma once

// Threshold-grid estimator. Geometric levels t_0 = 2, t_{r+1} = ceil((1+eps) t_r)
// (clamped to n) get data-independent thresholds
//
//   theta_r = (U(t_r) + L(t_{r+1})) / 2
//   U(t)    = sqrt(1+rho) E[max_t Z] + sqrt(2 eta ln n)
//   L(t)    = sqrt(1-rho) E[max_t Z] - sqrt(2 eta ln n)
//
// and a statistic S maps to k_hat = t_{r+1} for the first r with S <= theta_r.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "maxsketch/error.hpp"
#include "maxsketch/gaussian_max.hpp"

namespace maxsketch {

/// Absolute constants the theory leaves unspecified.
struct estimator_constants {
  double c_rho = 0.05; ///< warn when rho > c_rho * eps / ln n
  double c_eta = 0.01; ///< warn when eta > c_eta * eps^2 / (ln n)^2
  double c_m = 8.0;    ///< leading constant of required_m
};

struct estimator_params {
  std::uint64_t n = 2;    ///< bound on the stream length
  double eps = 0.5;       ///< multiplicative accuracy, (0, 1/2]
  double delta = 0.1;     ///< failure probability, (0, 1)
  double rho = 0.0;       ///< assumed bound on center correlations, [0, 1)
  double eta = 0.0;       ///< assumed within-cluster slack, [0, 1)
  std::uint64_t m = 1;    ///< projection count

  void validate() const {
    if (n < 2) throw invalid_parameter("estimator needs n >= 2 (got " + std::to_string(n) + ")");
    if (!(eps > 0.0 && eps <= 0.5)) throw invalid_parameter("estimator needs eps in (0, 1/2]");
    if (!(delta > 0.0 && delta < 1.0)) throw invalid_parameter("estimator needs delta in (0, 1)");
    if (!(rho >= 0.0 && rho < 1.0)) throw invalid_parameter("estimator needs rho in [0, 1)");
    if (!(eta >= 0.0 && eta < 1.0)) throw invalid_parameter("estimator needs eta in [0, 1)");
    if (m < 1) throw invalid_parameter("estimator needs m >= 1");
  }
};

/// ceil((1+eps) * t), treating products within a few ulps of an integer as
/// that integer (1.1 * 10 is 11, not 12).
[[nodiscard]] inline std::uint64_t next_geometric_level(std::uint64_t t, double eps) noexcept {
  const double y = (1.0 + eps) * static_cast<double>(t);
  const double r = std::round(y);
  const double c = std::abs(y - r) <= 1e-9 * y ? r : std::ceil(y);
  return std::max<std::uint64_t>(t + 1, static_cast<std::uint64_t>(c));
}

/// Levels start, ceil((1+eps) start), ... up to the first one >= limit,
/// which is clamped to limit. Strictly increasing.
[[nodiscard]] inline std::vector<std::uint64_t> geometric_levels(std::uint64_t start, double eps, std::uint64_t limit) {
  std::vector<std::uint64_t> levels{start};
  while (levels.back() < limit) levels.push_back(std::min(limit, next_geometric_level(levels.back(), eps)));
  return levels;
}

[[nodiscard]] inline double noise_slack(const estimator_params& p) {
  return std::sqrt(2.0 * p.eta * std::log(static_cast<double>(p.n)));
}

[[nodiscard]] inline double band_upper(std::uint64_t t, const estimator_params& p,
                                       const gaussian_max_table& table = gaussian_max_table::shared()) {
  if (t == 0) throw invalid_parameter("band_upper needs t >= 1");
  return std::sqrt(1.0 + p.rho) * table(t) + noise_slack(p);
}

[[nodiscard]] inline double band_lower(std::uint64_t t, const estimator_params& p,
                                       const gaussian_max_table& table = gaussian_max_table::shared()) {
  if (t == 0) throw invalid_parameter("band_lower needs t >= 1");
  return std::sqrt(1.0 - p.rho) * table(t) - noise_slack(p);
}

struct grid_row {
  std::uint64_t t = 0;       ///< t_r
  double theta = 0.0;        ///< theta_r
  double upper = 0.0;        ///< U(t_r)
  double lower_next = 0.0;   ///< L(ceil((1+eps) t_r)), i.e. L(t_{r+1}) below the clamp
};

class threshold_grid {
public:
  threshold_grid(std::vector<std::uint64_t> levels, std::vector<double> thetas, std::vector<double> uppers,
                 std::vector<double> lowers_next, estimator_params params, std::vector<std::string> warnings = {})
      : levels_(std::move(levels)), thetas_(std::move(thetas)), uppers_(std::move(uppers)),
        lowers_next_(std::move(lowers_next)), params_(params), warnings_(std::move(warnings)) {
    if (levels_.empty()) throw invalid_parameter("threshold grid needs at least one level");
    if (thetas_.size() + 1 != levels_.size() || uppers_.size() != thetas_.size() ||
        lowers_next_.size() != thetas_.size()) {
      throw invalid_parameter("threshold grid needs one threshold per adjacent level pair");
    }
    for (std::size_t r = 1; r < levels_.size(); ++r) {
      if (levels_[r] <= levels_[r - 1]) throw invalid_parameter("grid levels must be strictly increasing");
    }
    for (std::size_t r = 1; r < thetas_.size(); ++r) {
      if (!(thetas_[r] > thetas_[r - 1])) throw invalid_parameter("grid thresholds must be strictly increasing");
    }
  }

  /// Index of the last level, R.
  [[nodiscard]] std::size_t R() const noexcept { return levels_.size() - 1; }
  [[nodiscard]] const std::vector<std::uint64_t>& levels() const noexcept { return levels_; }
  [[nodiscard]] const std::vector<double>& thresholds() const noexcept { return thetas_; }
  [[nodiscard]] const estimator_params& params() const noexcept { return params_; }
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  [[nodiscard]] grid_row row(std::size_t r) const { return {levels_.at(r), thetas_.at(r), uppers_.at(r), lowers_next_.at(r)}; }

  /// Audit CSV: header "r,t_r,theta_r,U_tr,L_tr1", one row per threshold,
  /// and a final row "R,t_R,,," carrying the last level.
  void write_csv(std::ostream& out) const {
    out << "r,t_r,theta_r,U_tr,L_tr1\n";
    std::ostringstream line;
    line << std::setprecision(17);
    for (std::size_t r = 0; r < thetas_.size(); ++r) {
      line.str({});
      line << r << ',' << levels_[r] << ',' << thetas_[r] << ',' << uppers_[r] << ',' << lowers_next_[r] << '\n';
      out << line.str();
    }
    out << R() << ',' << levels_.back() << ",,,\n";
  }

  /// Inverse of write_csv. `params` are attached as-is.
  [[nodiscard]] static threshold_grid read_csv(std::istream& in, const estimator_params& params) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("r,t_r,theta_r,U_tr,L_tr1", 0) != 0) {
      throw format_error("grid csv: missing header r,t_r,theta_r,U_tr,L_tr1");
    }
    std::vector<std::uint64_t> levels;
    std::vector<double> thetas, uppers, lowers;
    std::size_t row = 0;
    bool closed = false;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (closed) throw format_error("grid csv: rows after the final level row");
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(cell);
      while (f.size() < 5) f.emplace_back();
      try {
        if (std::stoull(f[0]) != row) throw format_error("grid csv: row index out of order");
        levels.push_back(std::stoull(f[1]));
        if (f[2].empty()) {
          closed = true;
        } else {
          thetas.push_back(std::stod(f[2]));
          uppers.push_back(std::stod(f[3]));
          lowers.push_back(std::stod(f[4]));
        }
      } catch (const std::logic_error&) {
        throw format_error("grid csv: malformed row " + std::to_string(row + 1));
      }
      ++row;
    }
    if (!closed) throw format_error("grid csv: missing final level row");
    try {
      return threshold_grid(std::move(levels), std::move(thetas), std::move(uppers), std::move(lowers), params);
    } catch (const invalid_parameter& e) {
      throw format_error(std::string("grid csv: ") + e.what());
    }
  }

private:
  std::vector<std::uint64_t> levels_;
  std::vector<double> thetas_;
  std::vector<double> uppers_;
  std::vector<double> lowers_next_;
  estimator_params params_;
  std::vector<std::string> warnings_;
};

/// Warnings for rho/eta beyond the conditions under which the accuracy
/// guarantee is stated. Empty when both hold.
[[nodiscard]] inline std::vector<std::string> condition_warnings(const estimator_params& p,
                                                                 const estimator_constants& c = {}) {
  std::vector<std::string> out;
  const double ln_n = std::log(static_cast<double>(p.n));
  const double rho_max = c.c_rho * p.eps / ln_n;
  const double eta_max = c.c_eta * p.eps * p.eps / (ln_n * ln_n);
  if (p.rho > rho_max) {
    out.push_back("rho=" + std::to_string(p.rho) + " exceeds c_rho*eps/ln(n)=" + std::to_string(rho_max) +
                  "; accuracy guarantee not covered");
  }
  if (p.eta > eta_max) {
    out.push_back("eta=" + std::to_string(p.eta) + " exceeds c_eta*eps^2/ln(n)^2=" + std::to_string(eta_max) +
                  "; accuracy guarantee not covered");
  }
  return out;
}

/// Build the grid for `p`. Throws grid_soundness_error when some level has
/// L(ceil((1+eps) t_r)) <= U(t_r).
[[nodiscard]] inline threshold_grid build_grid(const estimator_params& p, const estimator_constants& c = {},
                                               const gaussian_max_table& table = gaussian_max_table::shared()) {
  p.validate();
  const auto levels = geometric_levels(2, p.eps, p.n);
  std::vector<double> thetas, uppers, lowers;
  for (std::size_t r = 0; r + 1 < levels.size(); ++r) {
    // The gap is measured against ceil((1+eps) t_r). That is t_{r+1} except at
    // the last level, where t_R is clamped to n; there both outcomes of the
    // final test are n, so the clamp must not make the grid unsound.
    const std::uint64_t next = next_geometric_level(levels[r], p.eps);
    const double u = band_upper(levels[r], p, table);
    const double l = band_lower(next, p, table);
    if (!(l - u > 0.0)) {
      throw grid_soundness_error("grid unsound at level r=" + std::to_string(r) + " (t_r=" + std::to_string(levels[r]) +
                                     ", next=" + std::to_string(next) + "): L(next) - U(t_r) = " +
                                     std::to_string(l - u) + " <= 0; reduce rho or eta",
                                 r);
    }
    uppers.push_back(u);
    lowers.push_back(l);
    thetas.push_back(0.5 * (u + l));
  }
  return threshold_grid(levels, std::move(thetas), std::move(uppers), std::move(lowers), p, condition_warnings(p, c));
}

struct estimate_result {
  std::uint64_t k_hat = 0;
  std::size_t fired = 0;  ///< r of the threshold that fired; R when none did
  bool fallback = false;  ///< no threshold fired
};

[[nodiscard]] inline estimate_result estimate(double s, const threshold_grid& grid) {
  if (std::isnan(s)) throw invalid_input("estimate: statistic is NaN");
  const auto& th = grid.thresholds();
  // First r with s <= theta_r; thresholds are strictly increasing.
  const auto it = std::lower_bound(th.begin(), th.end(), s);
  if (it == th.end()) return {grid.levels().back(), grid.R(), true};
  const auto r = static_cast<std::size_t>(it - th.begin());
  return {grid.levels()[r + 1], r, false};
}

/// m >= C ln(n) ln(2R/delta) / eps^2 with R the grid length for (n, eps).
[[nodiscard]] inline std::uint64_t required_m(std::uint64_t n, double eps, double delta, double c_m = 8.0) {
  if (n < 2) throw invalid_parameter("required_m needs n >= 2");
  if (!(eps > 0.0 && eps <= 0.5)) throw invalid_parameter("required_m needs eps in (0, 1/2]");
  if (!(delta > 0.0 && delta < 1.0)) throw invalid_parameter("required_m needs delta in (0, 1)");
  const auto grid_len = static_cast<double>(std::max<std::size_t>(1, geometric_levels(2, eps, n).size() - 1));
  const double m = c_m * std::log(static_cast<double>(n)) * std::log(2.0 * grid_len / delta) / (eps * eps);
  return static_cast<std::uint64_t>(std::ceil(m));
}

} // namespace maxsketch
