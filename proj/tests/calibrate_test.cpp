#include "soforest/calibrate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace soforest {
namespace {

double stub_seconds(double units) { return units * 1e-9; }

TEST(CalibrateCrossover, LinearStubsCrossExactlyWhereTheMathSays) {
  // exact(n) = 2n, hist(n) = 1000 + n: histogram first wins at n = 1001.
  const SplitTimeProbe exact = [](std::size_t n) { return stub_seconds(2.0 * n); };
  const SplitTimeProbe hist = [](std::size_t n) { return stub_seconds(1000.0 + n); };
  const CrossoverCalibration cal = calibrate_crossover(exact, hist, {});
  EXPECT_EQ(cal.breakeven, 1000u);
  EXPECT_FALSE(cal.fallback);
  EXPECT_FALSE(cal.samples.empty());
}

TEST(CalibrateCrossover, BreakevenIndependentOfSearchRange) {
  const SplitTimeProbe exact = [](std::size_t n) { return stub_seconds(2.0 * n); };
  const SplitTimeProbe hist = [](std::size_t n) { return stub_seconds(1000.0 + n); };
  CalibrationOptions opt;
  opt.n_min = 2;
  opt.n_max = 1 << 20;
  EXPECT_EQ(calibrate_crossover(exact, hist, opt).breakeven, 1000u);
}

TEST(CalibrateCrossover, HistogramNeverWinning) {
  const SplitTimeProbe exact = [](std::size_t n) { return stub_seconds(1.0 * n); };
  const SplitTimeProbe hist = [](std::size_t n) { return stub_seconds(10.0 * n); };
  CalibrationOptions opt;
  opt.n_min = 64;
  opt.n_max = 256;
  const CrossoverCalibration cal = calibrate_crossover(exact, hist, opt);
  EXPECT_EQ(cal.breakeven, 257u);  // exact everywhere
  EXPECT_FALSE(cal.fallback);
}

TEST(CalibrateCrossover, HistogramAlwaysWinning) {
  const SplitTimeProbe exact = [](std::size_t n) { return stub_seconds(10.0 * n); };
  const SplitTimeProbe hist = [](std::size_t n) { return stub_seconds(1.0); };
  CalibrationOptions opt;
  opt.n_min = 64;
  opt.n_max = 1024;
  const CrossoverCalibration cal = calibrate_crossover(exact, hist, opt);
  EXPECT_EQ(cal.breakeven, 64u);  // histogram already wins at the smallest probe
}

TEST(CalibrateCrossover, SamplesAreSortedAndConsistentWithTheStubs) {
  const SplitTimeProbe exact = [](std::size_t n) { return stub_seconds(2.0 * n); };
  const SplitTimeProbe hist = [](std::size_t n) { return stub_seconds(1000.0 + n); };
  const CrossoverCalibration cal = calibrate_crossover(exact, hist, {});

  ASSERT_GE(cal.samples.size(), 2u);
  for (std::size_t i = 1; i < cal.samples.size(); ++i)
    EXPECT_LT(cal.samples[i - 1].n, cal.samples[i].n);
  for (const CrossoverSample& s : cal.samples) {
    if (s.n <= cal.breakeven)
      EXPECT_GE(s.histogram_seconds, s.exact_seconds) << "n " << s.n;
    else
      EXPECT_LT(s.histogram_seconds, s.exact_seconds) << "n " << s.n;
  }

  // The crossing itself was measured, not extrapolated.
  const auto at = [&](std::size_t n) {
    return std::find_if(cal.samples.begin(), cal.samples.end(),
                        [&](const CrossoverSample& s) { return s.n == n; });
  };
  ASSERT_NE(at(cal.breakeven), cal.samples.end());
  ASSERT_NE(at(cal.breakeven + 1), cal.samples.end());
}

TEST(CalibrateCrossover, HardBudgetFallsBack) {
  // Every probe burns ~5 ms against a 1 us budget: the hard cap trips after
  // the first measurement and the fallback value is returned.
  const SplitTimeProbe slow = [](std::size_t) {
    Stopwatch w;
    while (w.seconds() < 5e-3) {
    }
    return 1e-3;
  };
  CalibrationOptions opt;
  opt.budget_seconds = 1e-6;
  opt.repetitions = 1;
  const CrossoverCalibration cal = calibrate_crossover(slow, slow, opt);
  EXPECT_TRUE(cal.fallback);
  EXPECT_EQ(cal.breakeven, kFallbackBreakeven);
}

TEST(CalibrateCrossover, ValidatesOptions) {
  const SplitTimeProbe p = [](std::size_t n) { return stub_seconds(n); };
  CalibrationOptions opt;
  opt.n_min = 1;
  EXPECT_THROW(calibrate_crossover(p, p, opt), std::invalid_argument);
  opt.n_min = 64;
  opt.n_max = 64;
  EXPECT_THROW(calibrate_crossover(p, p, opt), std::invalid_argument);
  opt.n_max = 65536;
  opt.repetitions = 0;
  EXPECT_THROW(calibrate_crossover(p, p, opt), std::invalid_argument);
}

TEST(CalibrateCrossover, RealProbesLandInsideTheSearchRange) {
  CalibrationOptions opt;
  opt.n_min = 64;
  opt.n_max = 8192;
  opt.budget_seconds = 0.05;
  const CrossoverCalibration cal = calibrate_crossover<float>(opt);
  EXPECT_GE(cal.breakeven, opt.n_min);
  EXPECT_LE(cal.breakeven, opt.n_max + 1);
  EXPECT_GT(cal.elapsed_seconds, 0.0);
  EXPECT_LE(cal.elapsed_seconds, 0.5);
  EXPECT_FALSE(cal.samples.empty());
  for (const CrossoverSample& s : cal.samples) {
    EXPECT_GT(s.exact_seconds, 0.0);
    EXPECT_GT(s.histogram_seconds, 0.0);
  }
}

}  // namespace
}  // namespace soforest
