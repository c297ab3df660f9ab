#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "maxsketch/readout.hpp"
#include "oracles.hpp"

using namespace maxsketch;

namespace {

double pav_sse(const std::vector<calibration_sample>& xs) {
  const auto fn = pav_fit(xs);
  double sse = 0.0;
  for (const auto& x : xs) {
    const double r = fn.evaluate(x.s) - double(x.k);
    sse += r * r;
  }
  return sse;
}

} // namespace

TEST(Pav, MonotoneDataIsReproduced) {
  const std::vector<calibration_sample> xs{{1, 1}, {2, 2}, {3, 3}};
  const auto fn = pav_fit(xs);
  EXPECT_EQ(fn.levels(), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(fn.evaluate(1), 1.0);
  EXPECT_EQ(fn.evaluate(2), 2.0);
  EXPECT_EQ(fn.evaluate(3), 3.0);
  EXPECT_EQ(fn.evaluate(-10), 1.0);
  EXPECT_EQ(fn.evaluate(10), 3.0);
}

TEST(Pav, ViolatingPairPoolsToMean) {
  const std::vector<calibration_sample> xs{{1, 2}, {2, 1}};
  const auto fn = pav_fit(xs);
  EXPECT_EQ(fn.levels(), (std::vector<double>{1.5}));
  EXPECT_EQ(fn.evaluate(1), 1.5);
  EXPECT_EQ(fn.evaluate(2), 1.5);
  EXPECT_NEAR(pav_sse(xs), oracle::brute_force_isotonic_sse({{1, 2}, {2, 1}}), 1e-12);
}

TEST(Pav, TiesAreGroupedFirst) {
  const std::vector<calibration_sample> xs{{1, 1}, {1, 3}, {2, 2}};
  const auto fn = pav_fit(xs);
  EXPECT_EQ(fn.evaluate(1), 2.0);
  EXPECT_EQ(fn.evaluate(2), 2.0);
  EXPECT_THROW((void)pav_fit(std::vector<calibration_sample>{}), invalid_input);
}

TEST(Pav, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 g(5);
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 1 + int(g() % 8);
    std::vector<calibration_sample> xs;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < n; ++i) {
      const double s = double(g() % 6);
      const auto k = 1 + g() % 20;
      xs.push_back({s, k});
      pts.emplace_back(s, double(k));
    }
    EXPECT_NEAR(pav_sse(xs), oracle::brute_force_isotonic_sse(pts), 1e-9);
  }
}

TEST(Pav, IdempotentOnItsOwnPredictions) {
  // A fixed point of the fit: its predictions are already isotonic, so the
  // best monotone fit to them has zero error.
  std::mt19937_64 g(9);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<calibration_sample> xs;
    for (int i = 0; i < 12; ++i) xs.push_back({double(g() % 9), 1 + g() % 30});
    const auto pred = pav_predictions(pav_fit(xs), xs);
    std::vector<std::pair<double, double>> refit;
    for (std::size_t i = 0; i < xs.size(); ++i) refit.emplace_back(xs[i].s, pred[i]);
    EXPECT_NEAR(oracle::brute_force_isotonic_sse(refit), 0.0, 1e-18);
  }
}

TEST(Readout, ApplyConventions) {
  const monotone_step_fn grid(readout_kind::threshold_grid, {1.0, 2.0}, {2, 3, 5}, 0.5);
  EXPECT_EQ(apply(grid, 0.5), 2u);
  EXPECT_EQ(apply(grid, 1.0), 3u); // closed on the left
  EXPECT_EQ(apply(grid, 1.999), 3u);
  EXPECT_EQ(apply(grid, 2.0), 5u);
  EXPECT_THROW((void)apply(grid, std::nan("")), invalid_input);
  const monotone_step_fn iso(readout_kind::isotonic, {1.0}, {0.2, 2.5});
  EXPECT_EQ(apply(iso, 0.0), 1u); // floor at 1
  EXPECT_EQ(apply(iso, 1.0), 3u); // nearest, halves away from zero
  EXPECT_THROW(monotone_step_fn(readout_kind::isotonic, {2.0, 1.0}, {1, 2, 3}), invalid_input);
  EXPECT_THROW(monotone_step_fn(readout_kind::isotonic, {1.0}, {3, 2}), invalid_input);
}

TEST(Thresholds, LevelRecursionWithEpsOne) {
  std::vector<calibration_sample> xs;
  const std::uint64_t ks[] = {1, 2, 4, 8};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) xs.push_back({double(i) + 0.1 * j, ks[i]});
  const auto fn = learn_thresholds(xs, 1.0);
  EXPECT_EQ(fn.levels(), (std::vector<double>{1, 2, 4, 8}));
  EXPECT_EQ(fn.breakpoints().size(), 3u);
  for (const auto& x : xs) EXPECT_EQ(apply(fn, x.s), x.k); // separable: zero training error
}

TEST(Thresholds, SplitTiesGoToSmallerTau) {
  // below {0, 2}, above {1, 3}: splits at 0.5 and 2.5 both make one error.
  const auto [tau, err] = best_split({0.0, 2.0}, {1.0, 3.0});
  EXPECT_EQ(err, 1u);
  EXPECT_EQ(tau, 0.5);
}

TEST(Thresholds, CrossingSplitsAreRepaired) {
  // Level 3 statistics sit below level 2 statistics.
  std::vector<calibration_sample> xs{{0.0, 1}, {2.0, 2}, {1.0, 3}, {3.0, 5}};
  const auto fn = learn_thresholds(xs, 0.5);
  for (std::size_t i = 1; i < fn.breakpoints().size(); ++i) EXPECT_GT(fn.breakpoints()[i], fn.breakpoints()[i - 1]);
  std::uint64_t prev = 0;
  for (double s = -1.0; s < 4.0; s += 0.01) {
    EXPECT_GE(apply(fn, s), prev);
    prev = apply(fn, s);
  }
}

TEST(Thresholds, DegenerateSamplesRejected) {
  EXPECT_THROW((void)learn_thresholds(std::vector<calibration_sample>{{1.0, 4}, {2.0, 4}}, 0.5), invalid_input);
}

TEST(Thresholds, BandConditionGivesZeroError) {
  // Level means G_L increasing; every sample within a quarter of the
  // smallest gap of its mean.
  std::mt19937_64 g(3);
  const std::vector<std::uint64_t> levels{1, 2, 3, 5, 8, 12};
  const std::vector<double> means{0.0, 0.6, 0.9, 1.2, 1.45, 1.65};
  const double quarter = 0.2 / 4.0;
  std::uniform_real_distribution<double> jitter(-quarter * 0.99, quarter * 0.99);
  std::vector<calibration_sample> xs;
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (int j = 0; j < 30; ++j) xs.push_back({means[l] + jitter(g), levels[l]});
  const auto fn = learn_thresholds(xs, 0.5);
  for (const auto& x : xs) EXPECT_EQ(apply(fn, x.s), x.k);
}

TEST(Readout, JsonRoundTrip) {
  const monotone_step_fn fn(readout_kind::isotonic, {0.25, 1.5}, {1.0, 2.5, 7.0}, 0.5);
  const auto back = readout_from_json(to_json(fn, {{"m", 12}}));
  EXPECT_TRUE(back == fn);
  for (double s : {0.0, 0.25, 1.0, 1.5, 9.0}) EXPECT_EQ(apply(back, s), apply(fn, s));
  EXPECT_THROW((void)readout_from_json(nlohmann::json{{"kind", "isotonic"}}), format_error);
  EXPECT_THROW((void)readout_from_json(nlohmann::json{{"kind", "bogus"}, {"breakpoints", {}}, {"levels", {1}}}),
               format_error);
}

TEST(Readout, RandomFitsAreMonotone) {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> u(-1.0, 5.0);
  std::vector<calibration_sample> xs;
  for (int i = 0; i < 300; ++i) {
    const double s = u(g);
    xs.push_back({s, static_cast<std::uint64_t>(1 + std::max(0.0, std::round(4 * s + 2 * u(g))))});
  }
  const auto iso = pav_fit(xs);
  const auto thr = learn_thresholds(xs, 0.5);
  std::vector<double> pts;
  for (int i = 0; i < 2000; ++i) pts.push_back(u(g) * 1.5);
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LE(apply(iso, pts[i - 1]), apply(iso, pts[i]));
    EXPECT_LE(apply(thr, pts[i - 1]), apply(thr, pts[i]));
  }
}
