#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "maxsketch/verify.hpp"

using namespace maxsketch;

namespace {

std::vector<double> basis_rows(std::size_t k, std::size_t d) {
  std::vector<double> rows(k * d, 0.0);
  for (std::size_t r = 0; r < k; ++r) rows[r * d + r] = 1.0;
  return rows;
}

} // namespace

TEST(McExpectedMax, SingleVectorHasMeanZero) {
  const auto r = mc_expected_max(basis_rows(1, 4), 4, 20000, 1, 0.0);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(std::abs(r.estimate), 4.0 * r.stderr_);
}

TEST(McExpectedMax, OrthogonalPairsAndTens) {
  const auto two = mc_expected_max(basis_rows(2, 8), 8, 50000, 2, 1.0 / std::sqrt(std::numbers::pi));
  EXPECT_TRUE(two.pass) << to_json(two).dump();
  const auto ten = mc_expected_max(basis_rows(10, 16), 16, 50000, 3, expected_max_iid(10));
  EXPECT_TRUE(ten.pass) << to_json(ten).dump();
}

TEST(McExpectedMax, Preconditions) {
  EXPECT_THROW((void)mc_expected_max({}, 4, 5000, 1), invalid_input);
  EXPECT_THROW((void)mc_expected_max(basis_rows(1, 4), 4, 999, 1), invalid_parameter);
}

TEST(Slepian, RhoZeroMatchesIid) {
  const auto r = check_slepian(8, 0.0, 100000, 4);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.estimate, expected_max_iid(8), 4.0 * r.stderr_);
}

TEST(Slepian, SandwichAndStrongCorrelation) {
  const auto r = check_slepian(16, 0.2, 200000, 5);
  EXPECT_TRUE(r.pass) << to_json(r).dump();
  const auto s = check_slepian(2, 0.99, 200000, 6);
  EXPECT_TRUE(s.pass);
  EXPECT_NEAR(s.estimate, std::sqrt(0.01) * expected_max_iid(2), 4.0 * s.stderr_);
  EXPECT_THROW((void)check_slepian(2, 1.0, 1000, 1), invalid_parameter);
}

TEST(Slepian, DeterministicUnderSeed) {
  const auto a = check_slepian(4, 0.3, 5000, 9);
  const auto b = check_slepian(4, 0.3, 5000, 9);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.stderr_, b.stderr_);
}

TEST(Perturbation, ZeroNoiseDuplicatesAreExact) {
  const auto s = generate_stream({.k_star = 4, .d = 32, .eta = 0.0}, 400, 1);
  const auto r = check_perturbation(s, 2000, 2);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.estimate, 0.0);
  EXPECT_EQ(r.extra.at("max_abs_trial_difference").get<double>(), 0.0);
}

TEST(Perturbation, BoundHoldsAndCommonNumbersReduceError) {
  const auto s = generate_stream({.k_star = 8, .d = 64, .eta = 1e-2}, 300, 3);
  const auto crn = check_perturbation(s, 4000, 4, true);
  const auto ind = check_perturbation(s, 4000, 4, false);
  EXPECT_TRUE(crn.pass);
  EXPECT_NEAR(crn.bound_hi, std::sqrt(2.0 * 1e-2 * std::log(300.0)), 1e-15);
  EXPECT_LT(crn.stderr_, ind.stderr_);
}

TEST(Gap, QuadratureAgainstLooseConstant) {
  EXPECT_NEAR(gap_c0 / 20.0, 0.0021387053717187186, 1e-17);
  const auto a = check_gap(2, 1.0);
  EXPECT_TRUE(a.pass);
  EXPECT_NEAR(a.estimate, expected_max_iid(4) - expected_max_iid(2), 1e-12);
  EXPECT_GT(a.estimate, 0.0);
  const auto b = check_gap(10, 0.5);
  EXPECT_TRUE(b.pass);
  EXPECT_GE(b.estimate, gap_c0 / 20.0 * 0.5 / std::sqrt(std::log(10.0)));
  EXPECT_TRUE(b.extra.contains("measured_constant"));
  const auto v = check_gap(2, 1e-10);
  EXPECT_TRUE(v.extra.at("vacuous").get<bool>());
  EXPECT_EQ(v.estimate, 0.0);
  EXPECT_THROW((void)check_gap(1, 0.5), invalid_parameter);
}

TEST(Concentration, UnitScaleAndScaling) {
  const auto s = generate_stream({.k_star = 6, .d = 32, .eta = 1e-3}, 120, 5);
  const auto one = check_concentration(s.vectors, 32, 1, 400, 6);
  EXPECT_LE(one.estimate, 1.5);
  const auto a = check_concentration(s.vectors, 32, 128, 500, 7);
  const auto b = check_concentration(s.vectors, 32, 256, 500, 8);
  EXPECT_TRUE(a.pass) << to_json(a).dump();
  EXPECT_TRUE(b.pass) << to_json(b).dump();
  const double ratio = a.estimate / b.estimate;
  EXPECT_NEAR(ratio, std::sqrt(2.0), 0.2 * std::sqrt(2.0));
  EXPECT_THROW((void)check_concentration(s.vectors, 32, 4, 99, 1), invalid_parameter);
}

TEST(Report, JsonFields) {
  const auto j = to_json(check_gap(4, 0.5));
  for (const char* key : {"name", "estimate", "stderr", "bound", "pass", "trials", "seed", "margin"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}
