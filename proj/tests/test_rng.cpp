#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "maxsketch/rng.hpp"

using namespace maxsketch;

TEST(Rng, Mix64IsSplitMix64) {
  // Reference outputs of the SplitMix64 generator seeded with 0.
  std::uint64_t state = 0;
  auto next = [&] {
    const auto out = mix64(state);
    state += 0x9e3779b97f4a7c15ULL;
    return out;
  };
  EXPECT_EQ(next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(next(), 0x06c45d188009454fULL);
}

TEST(Rng, DerivedKeysAreDistinct) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t s = 0; s < 32; ++s)
    for (std::uint64_t i = 0; i < 32; ++i) keys.insert(derive_key(s, i));
  EXPECT_EQ(keys.size(), 32u * 32u);
}

TEST(Rng, OpenUnitNeverHitsEndpoints) {
  EXPECT_GT(to_open_unit(0), 0.0);
  EXPECT_LT(to_open_unit(~std::uint64_t{0}), 1.0);
}

TEST(Rng, RowsAreReproducibleAndIndependentOfLength) {
  std::vector<double> a(17), b(17), c(9);
  fill_normal_row(42, 3, a);
  fill_normal_row(42, 3, b);
  fill_normal_row(42, 3, c);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < c.size() - 1; ++i) EXPECT_EQ(a[i], c[i]);
  fill_normal_row(42, 4, b);
  EXPECT_NE(a, b);
}

TEST(Rng, CounterRngReplaysAndBelowStaysInRange) {
  counter_rng r1(7), r2(7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(r1.next_u64(), r2.next_u64());
  counter_rng r(11);
  std::vector<int> hist(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const auto v = r.below(5);
    ASSERT_LT(v, 5u);
    ++hist[v];
  }
  // Each bucket has mean 10000 and sd ~ 89; 6 sd is generous.
  for (int h : hist) EXPECT_NEAR(h, 10000, 540);
}

TEST(Rng, NormalMoments) {
  counter_rng r(3);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(double(n)));
  // var of the sample variance is ~2/n for normals.
  EXPECT_LT(std::abs(var - 1.0), 4.0 * std::sqrt(2.0 / n));
}
