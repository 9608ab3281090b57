#include "soforest/random.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "test_util.hpp"

namespace soforest {
namespace {

TEST(SplitMix64, MatchesReferenceOutputs) {
  // Output sequence of the reference splitmix64 generator seeded with
  // 1234567; our function is its state-to-output step.
  const std::uint64_t gamma = 0x9e3779b97f4a7c15ull;
  EXPECT_EQ(split_mix64(1234567), 6457827717110365317ull);
  EXPECT_EQ(split_mix64(1234567 + gamma), 3203168211198807973ull);
  EXPECT_EQ(split_mix64(1234567 + 2 * gamma), 9817491932198370423ull);
  EXPECT_EQ(split_mix64(0), 0xe220a8397b1dcdafull);
}

TEST(SplitMix64, Bijective) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t x = 0; x < 10000; ++x) seen.insert(split_mix64(x));
  EXPECT_EQ(seen.size(), 10000u);
}

TEST(DeriveSeed, DistinctStreams) {
  const std::uint64_t s = 42;
  EXPECT_NE(derive_seed(s, 0), derive_seed(s, 1));
  EXPECT_NE(derive_seed(s, 1), derive_seed(s, 2));
  EXPECT_NE(derive_seed(s, 1), s);
  EXPECT_NE(derive_seed(s, 1), derive_seed(s + 1, 1));
  EXPECT_EQ(derive_seed(s, 7), derive_seed(s, 7));

  std::set<std::uint64_t> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed)
    for (std::uint64_t key = 0; key < 64; ++key) seen.insert(derive_seed(seed, key));
  EXPECT_EQ(seen.size(), 64u * 64u);
}

TEST(MakeRng, DeterministicPerSeed) {
  Rng a = make_rng(9);
  Rng b = make_rng(9);
  Rng c = make_rng(10);
  EXPECT_EQ(a(), b());
  Rng a2 = make_rng(9);
  EXPECT_NE(a2(), c());
}

TEST(FloydSample, SizeRangeAndOrder) {
  Rng rng = make_rng(1);
  for (std::uint64_t n : {1u, 2u, 10u, 100u, 1000u}) {
    for (std::uint64_t k : {std::uint64_t{0}, std::uint64_t{1}, n / 2, n}) {
      const std::vector<std::uint64_t> s = floyd_sample(n, k, rng);
      ASSERT_EQ(s.size(), k);
      for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_LT(s[i], n);
        if (i) EXPECT_LT(s[i - 1], s[i]);
      }
    }
  }
}

TEST(FloydSample, FullDrawIsIdentity) {
  Rng rng = make_rng(2);
  const std::vector<std::uint64_t> s = floyd_sample(7, 7, rng);
  ASSERT_EQ(s.size(), 7u);
  for (std::uint64_t i = 0; i < 7; ++i) EXPECT_EQ(s[i], i);
}

TEST(FloydSample, OversizedKClampsToN) {
  Rng rng = make_rng(3);
  EXPECT_EQ(floyd_sample(5, 9, rng).size(), 5u);
}

TEST(FloydSample, ElementMarginalsUniform) {
  // Each of n elements should land in a size-k subset with probability k/n.
  const std::uint64_t n = 10, k = 3;
  const std::size_t draws = 30000;
  std::vector<std::uint64_t> hits(n, 0);
  Rng rng = make_rng(4);
  for (std::size_t i = 0; i < draws; ++i)
    for (std::uint64_t v : floyd_sample(n, k, rng)) hits[v]++;

  const std::vector<double> expected(n, static_cast<double>(draws) * k / n);
  const double p = testutil::gof_p_value(hits, expected);
  EXPECT_GE(p, 1e-3) << "marginal occupancy p-value " << p;
}

TEST(FloydSample, SubsetsUniform) {
  // All C(5,2)=10 subsets of [0,5) should be equally likely.
  const std::size_t draws = 20000;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
  Rng rng = make_rng(5);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto s = floyd_sample(5, 2, rng);
    counts[{s[0], s[1]}]++;
  }
  ASSERT_EQ(counts.size(), 10u);
  std::vector<std::uint64_t> observed;
  for (const auto& [subset, c] : counts) observed.push_back(c);
  const std::vector<double> expected(10, draws / 10.0);
  const double p = testutil::gof_p_value(observed, expected);
  EXPECT_GE(p, 1e-3) << "subset uniformity p-value " << p;
}

TEST(ChiSquareHelpers, KnownQuantiles) {
  // Textbook chi-square critical values.
  EXPECT_NEAR(testutil::chi_square_p(3.841459, 1), 0.05, 5e-4);
  EXPECT_NEAR(testutil::chi_square_p(18.307038, 10), 0.05, 5e-4);
  EXPECT_NEAR(testutil::chi_square_p(4.605170, 2), 0.10, 5e-4);
  EXPECT_DOUBLE_EQ(testutil::chi_square_p(0.0, 5), 1.0);
  EXPECT_LT(testutil::chi_square_p(100.0, 3), 1e-6);
}

}  // namespace
}  // namespace soforest
