#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "maxsketch/sketch.hpp"
#include "oracles.hpp"

using namespace maxsketch;

namespace {

std::vector<double> random_unit_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  counter_rng rng(seed);
  std::vector<double> rows(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<double> r(rows.data() + i * d, d);
    rng.fill_normal(r);
    double s = 0.0;
    for (double v : r) s += v * v;
    for (double& v : r) v /= std::sqrt(s);
  }
  return rows;
}

} // namespace

TEST(Projections, DeterministicFromSeed) {
  const auto a = projection_set::create(3, 2, 42);
  const auto b = projection_set::create(3, 2, 42);
  ASSERT_EQ(a.matrix().size(), 6u);
  EXPECT_TRUE(std::equal(a.matrix().begin(), a.matrix().end(), b.matrix().begin()));
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), projection_set::create(3, 2, 43).fingerprint());
  EXPECT_NE(a.fingerprint(), projection_set::create(3, 3, 42).fingerprint());
}

TEST(Projections, EntryMeanWithinClt) {
  const auto p = projection_set::create(8, 4096, 7);
  const double mean = std::accumulate(p.matrix().begin(), p.matrix().end(), 0.0) / double(p.matrix().size());
  EXPECT_LE(std::abs(mean), 4.0 / std::sqrt(4096.0 * 8.0));
}

TEST(Projections, ZeroShapesRejected) {
  EXPECT_THROW((void)projection_set::create(0, 1, 0), invalid_parameter);
  EXPECT_THROW((void)projection_set::create(1, 0, 0), invalid_parameter);
}

TEST(Projections, OnTheFlyMatchesMaterialized) {
  const auto a = projection_set::create(13, 37, 9);
  const auto b = projection_set::create(13, 37, 9, projection_storage::on_the_fly);
  EXPECT_TRUE(b.matrix().empty());
  for (std::size_t j = 0; j < 37; ++j) EXPECT_EQ(a.row(j), b.row(j));
  const auto rows = random_unit_rows(21, 13, 5);
  auto sa = sketch_state::empty_for(a);
  auto sb = sketch_state::empty_for(b);
  update_batch(sa, rows, 21, a);
  update_batch(sb, rows, 21, b);
  EXPECT_TRUE(sa == sb);
}

TEST(UnitVectorTest, NormalizesAndRejects) {
  const auto u = unit_vector::from(std::vector<double>{0.6, 0.8004});
  double s = 0.0;
  for (double v : u.coords()) s += v * v;
  EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
  EXPECT_THROW((void)unit_vector::from(std::vector<double>{0.5, 0.5}), invalid_input);
  EXPECT_THROW((void)unit_vector::from(std::vector<double>{std::nan(""), 1.0}), invalid_input);
  EXPECT_THROW((void)unit_vector::from(std::vector<double>{}), invalid_input);
  const std::vector<float> f{0.0f, 1.0f};
  EXPECT_EQ(unit_vector::from(std::span<const float>(f)).d(), 2u);
}

TEST(Sketch, UpdateIsIdempotentForRepeatedVector) {
  const auto p = projection_set::create(5, 64, 1);
  const auto x = unit_vector::from(std::vector<double>{0.0, 0.6, 0.0, 0.8, 0.0});
  auto s = sketch_state::empty_for(p);
  update(s, x, p);
  const std::vector<double> once(s.maxima().begin(), s.maxima().end());
  update(s, x, p);
  EXPECT_TRUE(std::equal(once.begin(), once.end(), s.maxima().begin()));
  EXPECT_EQ(s.items_seen(), 2u);
}

TEST(Sketch, HandFixedDirections) {
  // w_1 = (1, 0), w_2 = (0, 1), w_3 = (0.6, -0.8); rows fed through the kernel directly.
  const std::vector<double> w{1.0, 0.0, 0.0, 1.0, 0.6, -0.8};
  const std::vector<double> xs{0.0, 1.0, 0.8, 0.6, -1.0, 0.0};
  std::vector<double> maxima(3, -std::numeric_limits<double>::infinity());
  detail::accumulate_max([&](std::size_t j, std::size_t) { return w.data() + 2 * j; }, 3, xs.data(), 1, 2,
                         maxima.data());
  EXPECT_EQ(maxima[0], 0.0); // <(1,0), (0,1)> = 0
  detail::accumulate_max([&](std::size_t j, std::size_t) { return w.data() + 2 * j; }, 3, xs.data() + 2, 2, 2,
                         maxima.data());
  for (std::size_t j = 0; j < 3; ++j) {
    double expect = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 3; ++i) expect = std::max(expect, w[2 * j] * xs[2 * i] + w[2 * j + 1] * xs[2 * i + 1]);
    EXPECT_NEAR(maxima[j], expect, 1e-15);
  }
  EXPECT_NEAR(maxima[0], 0.8, 1e-15);
  EXPECT_NEAR(maxima[1], 1.0, 1e-15);
  EXPECT_NEAR(maxima[2], 0.0, 1e-15);
}

TEST(Sketch, MaximaMatchBruteForce) {
  const std::size_t d = 19, m = 23, n = 3;
  const auto p = projection_set::create(d, m, 77);
  const auto rows = random_unit_rows(n, d, 78);
  auto s = sketch_state::empty_for(p);
  for (std::size_t i = 0; i < n; ++i) {
    update(s, unit_vector::from(std::vector<double>(rows.begin() + i * d, rows.begin() + (i + 1) * d)), p);
  }
  long double sum = 0.0L;
  for (std::size_t j = 0; j < m; ++j) {
    const auto w = p.row(j);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, oracle::naive_dot(w.data(), rows.data() + i * d, d));
    EXPECT_NEAR(s.maxima()[j], best, 1e-13);
    sum += s.maxima()[j];
  }
  EXPECT_NEAR(statistic(s), static_cast<double>(sum / m), 1e-14);
}

TEST(Sketch, StatisticIsMean) {
  const auto p = projection_set::create(2, 2, 1);
  auto s = sketch_state::empty_for(p);
  EXPECT_THROW((void)statistic(s), empty_sketch_error);
  // Build [1, 3] through the serialized form.
  auto bytes = serialize(s);
  const double vals[2] = {1.0, 3.0};
  bytes[22] = 1; // items_seen = 1
  for (int j = 0; j < 2; ++j) {
    std::vector<std::uint8_t> enc;
    detail::put_f64(enc, vals[j]);
    std::copy(enc.begin(), enc.end(), bytes.begin() + 30 + 8 * j);
  }
  EXPECT_DOUBLE_EQ(statistic(deserialize(bytes)), 2.0);
}

TEST(Sketch, DimensionAndBindingErrors) {
  const auto p = projection_set::create(3, 4, 1);
  const auto q = projection_set::create(3, 4, 2);
  auto s = sketch_state::empty_for(p);
  EXPECT_THROW(update(s, unit_vector::from(std::vector<double>{1.0, 0.0}), p), dimension_error);
  EXPECT_THROW(update(s, unit_vector::from(std::vector<double>{1.0, 0.0, 0.0}), q), binding_error);
  EXPECT_THROW((void)merge(s, sketch_state::empty_for(q)), binding_error);
}

TEST(Sketch, MonotoneUnderUpdates) {
  const auto p = projection_set::create(6, 32, 4);
  const auto rows = random_unit_rows(40, 6, 5);
  auto s = sketch_state::empty_for(p);
  std::vector<double> prev(s.maxima().begin(), s.maxima().end());
  for (std::size_t i = 0; i < 40; ++i) {
    update_batch(s, std::span<const double>(rows).subspan(i * 6, 6), 1, p);
    for (std::size_t j = 0; j < 32; ++j) EXPECT_GE(s.maxima()[j], prev[j]);
    prev.assign(s.maxima().begin(), s.maxima().end());
  }
}

TEST(Sketch, MergeLaws) {
  const auto p = projection_set::create(7, 50, 8);
  const auto rows = random_unit_rows(10, 7, 9);
  const auto whole = sketch_rows(rows, p);
  const auto a = sketch_rows(std::span<const double>(rows).first(4 * 7), p);
  const auto b = sketch_rows(std::span<const double>(rows).subspan(4 * 7), p);
  const auto empty = sketch_state::empty_for(p);
  EXPECT_TRUE(merge(a, b) == whole);
  EXPECT_TRUE(merge(a, b) == merge(b, a));
  EXPECT_TRUE(merge(a, empty) == a);
  EXPECT_TRUE(merge(empty, empty) == empty);
  const auto c = sketch_rows(std::span<const double>(rows).subspan(2 * 7, 3 * 7), p);
  EXPECT_TRUE(merge(merge(a, b), c) == merge(a, merge(b, c)));
}

TEST(Sketch, PermutationAndDuplicateInvariance) {
  const std::size_t d = 11, n = 30;
  const auto p = projection_set::create(d, 40, 12);
  auto rows = random_unit_rows(n, d, 13);
  const auto base = sketch_rows(rows, p);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 g(1);
  std::shuffle(perm.begin(), perm.end(), g);
  std::vector<double> shuffled(n * d);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(rows.begin() + perm[i] * d, d, shuffled.begin() + i * d);
  const auto s2 = sketch_rows(shuffled, p);
  EXPECT_TRUE(std::equal(base.maxima().begin(), base.maxima().end(), s2.maxima().begin()));
  const std::vector<double> row5(rows.begin() + 5 * d, rows.begin() + 6 * d);
  rows.resize(rows.size() + d);
  std::copy(row5.begin(), row5.end(), rows.end() - static_cast<std::ptrdiff_t>(d));
  const auto s3 = sketch_rows(rows, p);
  EXPECT_TRUE(std::equal(base.maxima().begin(), base.maxima().end(), s3.maxima().begin()));
  EXPECT_EQ(s3.items_seen(), n + 1);
}

TEST(Sketch, BatchSizeDoesNotChangeResult) {
  const std::size_t d = 33;
  const auto p = projection_set::create(d, 17, 3);
  const auto rows = random_unit_rows(101, d, 4);
  // Reference: one normalized vector per kernel call.
  auto one = sketch_state::empty_for(p);
  std::vector<double> unit(d);
  for (std::size_t i = 0; i < 101; ++i) {
    normalize_into(std::span<const double>(rows).subspan(i * d, d), std::span<double>(unit));
    update_batch(one, unit, 1, p);
  }
  for (std::size_t batch : {1u, 3u, 8u, 64u, 500u}) {
    sketcher sk(p, batch);
    for (std::size_t i = 0; i < 101; ++i) sk.add(std::span<const double>(rows).subspan(i * d, d));
    EXPECT_TRUE(std::move(sk).release() == one) << "batch " << batch;
  }
}

TEST(Serialization, RoundTrips) {
  const auto p = projection_set::create(9, 31, 5);
  const auto empty = sketch_state::empty_for(p);
  EXPECT_TRUE(deserialize(serialize(empty)) == empty);
  const auto rows = random_unit_rows(100, 9, 6);
  const auto s = sketch_rows(rows, p);
  const auto back = deserialize(serialize(s));
  EXPECT_TRUE(back == s);
  EXPECT_EQ(back.fingerprint(), s.fingerprint());
  EXPECT_EQ(serialize(s).size(), 30u + 8u * 31u);
}

TEST(Serialization, RejectsMalformedBytes) {
  const auto p = projection_set::create(4, 3, 5);
  const auto s = sketch_rows(random_unit_rows(5, 4, 1), p);
  auto bytes = serialize(s);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW((void)deserialize(bad), format_error);
  bad = bytes;
  bad[4] = 2; // version
  EXPECT_THROW((void)deserialize(bad), format_error);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW((void)deserialize(bad), format_error);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW((void)deserialize(bad), format_error);
  EXPECT_THROW((void)deserialize(std::span<const std::uint8_t>(bytes).first(10)), format_error);
  bad = bytes;
  std::fill(bad.begin() + 22, bad.begin() + 30, 0); // items_seen = 0 with finite maxima
  EXPECT_THROW((void)deserialize(bad), format_error);
  try {
    bad = bytes;
    bad[1] = '?';
    (void)deserialize(bad);
    FAIL();
  } catch (const format_error& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Serialization, NegativeInfinityBitPattern) {
  const auto p = projection_set::create(2, 1, 0);
  const auto bytes = serialize(sketch_state::empty_for(p));
  const std::vector<std::uint8_t> ninf{0, 0, 0, 0, 0, 0, 0xf0, 0xff};
  EXPECT_TRUE(std::equal(ninf.begin(), ninf.end(), bytes.end() - 8));
}
