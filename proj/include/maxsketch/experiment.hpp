#pragma once

// End-to-end synthetic experiments: generate a clusterable stream, sketch it
// with fresh projections, estimate k, and tally accuracy per k.

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "maxsketch/detail/parallel.hpp"
#include "maxsketch/estimator.hpp"
#include "maxsketch/sketch.hpp"
#include "maxsketch/streamgen.hpp"

namespace maxsketch {

struct experiment_config {
  std::vector<std::uint64_t> ks{4, 8, 16, 32};
  std::uint64_t trials = 50;
  std::size_t n = 2000;
  std::size_t d = 512;
  double eta = 1e-4;
  double rho = 0.0;             ///< stream center bound (rejection mode) and estimator rho
  center_mode centers = center_mode::orthonormal;
  double eps = 0.5;
  double delta = 0.1;
  std::size_t m = 4096;
  std::uint64_t seed = 1;
  estimator_constants constants{};

  void validate() const {
    if (trials == 0) throw invalid_parameter("experiment needs trials >= 1");
    if (ks.empty()) throw invalid_parameter("experiment needs a nonempty k range");
    for (auto k : ks) {
      if (k < 2 || k > n) throw invalid_parameter("experiment k=" + std::to_string(k) + " is outside [2, n]");
    }
    if (m == 0) throw invalid_parameter("experiment needs m >= 1");
  }

  [[nodiscard]] estimator_params params() const {
    return {.n = n, .eps = eps, .delta = delta, .rho = rho, .eta = eta, .m = m};
  }
};

/// Upper end of the accuracy band the grid can deliver for k: t_{r+1} where
/// t_r is the smallest level >= k. Equals (1+eps) k when k sits on a level.
[[nodiscard]] inline std::uint64_t grid_band_upper(const threshold_grid& grid, std::uint64_t k) {
  const auto& lv = grid.levels();
  const auto it = std::lower_bound(lv.begin(), lv.end(), k);
  if (it == lv.end()) return lv.back();
  const auto r = static_cast<std::size_t>(it - lv.begin());
  return r + 1 < lv.size() ? lv[r + 1] : lv.back();
}

struct trial_outcome {
  std::uint64_t k = 0;
  std::uint64_t k_hat = 0;
  double statistic = 0.0;
};

/// Seed for trial `t` at count k.
[[nodiscard]] inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t k, std::uint64_t t) noexcept {
  return derive_key(derive_key(base, k), t);
}

[[nodiscard]] inline trial_outcome run_trial(const experiment_config& cfg, const threshold_grid& grid, std::uint64_t k,
                                             std::uint64_t seed) {
  cluster_spec spec{.k_star = k, .d = cfg.d, .eta = cfg.eta, .rho = cfg.rho, .centers = cfg.centers};
  const auto stream = generate_stream(spec, cfg.n, derive_key(seed, 1));
  const auto proj = projection_set::create(cfg.d, cfg.m, derive_key(seed, 2));
  auto state = sketch_state::empty_for(proj);
  update_batch(state, stream.vectors, stream.n(), proj);
  const double s = statistic(state);
  return {k, estimate(s, grid).k_hat, s};
}

struct experiment_row {
  std::uint64_t k = 0;
  std::uint64_t trials = 0;
  double mean_k_hat = 0.0;
  double exact_rate = 0.0;     ///< k_hat == k
  double band_rate = 0.0;      ///< k <= k_hat <= (1+eps) k
  double grid_band_rate = 0.0; ///< k <= k_hat <= grid_band_upper(k)
  double runtime_s = 0.0;
  std::vector<trial_outcome> outcomes;
};

[[nodiscard]] inline std::vector<experiment_row> run_experiment(const experiment_config& cfg) {
  cfg.validate();
  const auto grid = build_grid(cfg.params(), cfg.constants);
  std::vector<experiment_row> rows;
  for (auto k : cfg.ks) {
    const auto start = std::chrono::steady_clock::now();
    experiment_row row;
    row.k = k;
    row.trials = cfg.trials;
    row.outcomes.resize(cfg.trials);
    detail::parallel_for(cfg.trials, [&](std::size_t t) {
      row.outcomes[t] = run_trial(cfg, grid, k, trial_seed(cfg.seed, k, t));
    });
    const auto upper = grid_band_upper(grid, k);
    for (const auto& o : row.outcomes) {
      row.mean_k_hat += static_cast<double>(o.k_hat);
      row.exact_rate += o.k_hat == k ? 1.0 : 0.0;
      row.band_rate += (o.k_hat >= k && static_cast<double>(o.k_hat) <= (1.0 + cfg.eps) * static_cast<double>(k)) ? 1.0 : 0.0;
      row.grid_band_rate += (o.k_hat >= k && o.k_hat <= upper) ? 1.0 : 0.0;
    }
    const auto tn = static_cast<double>(cfg.trials);
    row.mean_k_hat /= tn;
    row.exact_rate /= tn;
    row.band_rate /= tn;
    row.grid_band_rate /= tn;
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_experiment_csv(std::ostream& out, const std::vector<experiment_row>& rows) {
  out << "k,trials,mean_k_hat,exact_rate,band_rate,grid_band_rate,runtime_s\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : rows) {
    line.str({});
    line << r.k << ',' << r.trials << ',' << r.mean_k_hat << ',' << r.exact_rate << ',' << r.band_rate << ','
         << r.grid_band_rate << ',' << r.runtime_s << '\n';
    out << line.str();
  }
}

[[nodiscard]] inline nlohmann::json experiment_json(const std::vector<experiment_row>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"k", r.k},
                   {"trials", r.trials},
                   {"mean_k_hat", r.mean_k_hat},
                   {"exact_rate", r.exact_rate},
                   {"band_rate", r.band_rate},
                   {"grid_band_rate", r.grid_band_rate},
                   {"runtime_s", r.runtime_s}});
  }
  return arr;
}

} // namespace maxsketch
