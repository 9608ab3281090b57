#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "soforest/histogram.hpp"
#include "soforest/random.hpp"
#include "soforest/split.hpp"
#include "soforest/timing.hpp"

namespace soforest {

struct CrossoverSample {
  std::size_t n = 0;
  double exact_seconds = 0.0;
  double histogram_seconds = 0.0;
};

struct CalibrationOptions {
  std::size_t n_min = 64;
  std::size_t n_max = 65536;
  double budget_seconds = 0.1;
  std::size_t bin_count = 256;
  bool two_level = true;
  std::size_t repetitions = 5;  // median of this many runs per probe
  std::uint64_t seed = 0xca11b8a7e5eedull;

  bool operator==(const CalibrationOptions&) const = default;
};

struct CrossoverCalibration {
  // Largest node size for which the exact method is still chosen; the
  // histogram method takes over strictly above it.
  std::size_t breakeven = 1024;
  std::vector<CrossoverSample> samples;  // sorted by n
  double elapsed_seconds = 0.0;
  bool fallback = false;
};

inline constexpr std::size_t kFallbackBreakeven = 1024;

using SplitTimeProbe = std::function<double(std::size_t)>;

// Binary-searches [n_min, n_max] for the node size where the histogram
// probe first beats the exact probe. Probe cost is kept inside
// budget_seconds (soft) and stops hard at twice that. With no usable
// measurements the fallback breakeven of 1024 is returned.
inline CrossoverCalibration calibrate_crossover(const SplitTimeProbe& exact_probe,
                                                const SplitTimeProbe& histogram_probe,
                                                const CalibrationOptions& opt = {}) {
  if (opt.n_min < 2 || opt.n_min >= opt.n_max)
    throw std::invalid_argument("need 2 <= n_min < n_max");
  if (opt.repetitions < 1) throw std::invalid_argument("repetitions must be positive");

  Stopwatch clock;
  CrossoverCalibration out;

  const double soft = opt.budget_seconds;
  const double hard = 2.0 * opt.budget_seconds;

  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };

  auto measure = [&](std::size_t n) -> CrossoverSample {
    std::vector<double> es, hs;
    for (std::size_t rep = 0; rep < opt.repetitions; ++rep) {
      es.push_back(exact_probe(n));
      hs.push_back(histogram_probe(n));
      if (clock.seconds() > soft) break;
    }
    CrossoverSample s{n, median(es), median(hs)};
    out.samples.push_back(s);
    return s;
  };

  auto finalize = [&](std::size_t breakeven) {
    out.breakeven = breakeven;
    std::sort(out.samples.begin(), out.samples.end(),
              [](const CrossoverSample& a, const CrossoverSample& b) { return a.n < b.n; });
    out.elapsed_seconds = clock.seconds();
    return out;
  };

  auto wins = [](const CrossoverSample& s) { return s.histogram_seconds < s.exact_seconds; };

  const CrossoverSample at_min = measure(opt.n_min);
  if (wins(at_min)) return finalize(opt.n_min);
  if (clock.seconds() > hard) {
    out.fallback = true;
    return finalize(kFallbackBreakeven);
  }

  const CrossoverSample at_max = measure(opt.n_max);
  if (!wins(at_max)) return finalize(opt.n_max + 1);

  std::size_t lo = opt.n_min;  // histogram loses here
  std::size_t hi = opt.n_max;  // histogram wins here
  while (hi - lo > 1) {
    if (clock.seconds() > hard) break;
    const std::size_t mid = lo + (hi - lo) / 2;
    if (wins(measure(mid)))
      hi = mid;
    else
      lo = mid;
  }
  return finalize(hi - 1);
}

namespace detail {

// Keeps probe results observable so the measured work is not optimized out.
inline volatile double calibration_sink = 0.0;

}  // namespace detail

namespace detail {

// A single split search on a small node lasts a couple of microseconds, well
// under scheduler jitter; probes batch enough searches to measure tens of
// microseconds and report the per-search average.
inline std::size_t probe_batch_size(std::size_t n) {
  return std::clamp<std::size_t>(8192 / std::max<std::size_t>(n, 1), 1, 128);
}

}  // namespace detail

// Calibrates with real probes: a synthetic two-class node of n_max values
// is prepared once, and each probe runs full exact or histogram split
// searches over the first n of them.
template <typename T = float>
CrossoverCalibration calibrate_crossover(const CalibrationOptions& opt = {}) {
  std::vector<T> values(opt.n_max);
  std::vector<std::int32_t> labels(opt.n_max);
  {
    Rng rng = make_rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < opt.n_max; ++i) {
      labels[i] = static_cast<std::int32_t>(i % 2);
      values[i] = static_cast<T>(gauss(rng) + (labels[i] ? 1.0 : -1.0));
    }
  }

  SplitTimeProbe exact_probe = [&](std::size_t n) {
    const std::span<const T> v(values.data(), n);
    const std::span<const std::int32_t> y(labels.data(), n);
    const std::size_t runs = detail::probe_batch_size(n);
    double gain = 0.0;
    Stopwatch t;
    for (std::size_t r = 0; r < runs; ++r) {
      auto cand = best_split_exact(v, y, 2);
      if (cand) gain += cand->gain;
    }
    const double s = t.seconds();
    detail::calibration_sink = detail::calibration_sink + gain;
    return s / static_cast<double>(runs);
  };

  std::vector<T> boundaries(opt.bin_count - 1);
  std::vector<std::uint32_t> counts(opt.bin_count * 2);
  Rng hist_rng = make_rng(derive_seed(opt.seed, 1));
  SplitTimeProbe histogram_probe = [&](std::size_t n) {
    const std::span<const T> v(values.data(), n);
    const std::span<const std::int32_t> y(labels.data(), n);
    const std::size_t runs = detail::probe_batch_size(n);
    double gain = 0.0;
    Stopwatch t;
    for (std::size_t r = 0; r < runs; ++r) {
      const std::size_t nb = sample_boundaries(v, opt.bin_count, hist_rng, boundaries.data());
      if (nb == 0) continue;
      const std::span<const T> bnd(boundaries.data(), nb);
      const BinningImpl impl = opt.two_level && TwoLevelTable<T>::supports(nb)
                                   ? BinningImpl::kTwoLevel
                                   : BinningImpl::kScalar;
      build_histogram(v, y, bnd, 2, std::span<std::uint32_t>(counts.data(), (nb + 1) * 2), impl);
      auto cand = best_split_histogram(bnd, std::span<const std::uint32_t>(counts.data(), (nb + 1) * 2), 2);
      if (cand) gain += cand->gain;
    }
    const double s = t.seconds();
    detail::calibration_sink = detail::calibration_sink + gain;
    return s / static_cast<double>(runs);
  };

  // Untimed warmup: builds the xlogx table up front and touches both code
  // paths so first-call costs do not contaminate the first probe.
  detail::xlogx(opt.n_max);
  const std::size_t warm_n = std::min<std::size_t>(opt.n_max, 512);
  exact_probe(warm_n);
  histogram_probe(warm_n);

  return calibrate_crossover(exact_probe, histogram_probe, opt);
}

}  // namespace soforest
