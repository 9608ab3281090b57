#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <vector>

namespace soforest {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  void reset() { start_ = std::chrono::steady_clock::now(); }
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Split search cost broken down by phase, in seconds.
struct SplitPhaseTimes {
  double sample_projections = 0.0;
  double apply_projections = 0.0;
  double build_histograms = 0.0;
  double evaluate_splits = 0.0;

  SplitPhaseTimes& operator+=(const SplitPhaseTimes& o) {
    sample_projections += o.sample_projections;
    apply_projections += o.apply_projections;
    build_histograms += o.build_histograms;
    evaluate_splits += o.evaluate_splits;
    return *this;
  }
};

struct DepthAccum {
  double seconds = 0.0;
  std::uint64_t nodes = 0;
  std::uint64_t samples = 0;
};

inline constexpr std::size_t kDepthBuckets = 4;

inline std::size_t depth_bucket(std::size_t depth) { return std::min<std::size_t>(depth / 5, 3); }

inline const char* depth_bucket_name(std::size_t bucket) {
  static constexpr const char* names[kDepthBuckets] = {"0-4", "5-9", "10-14", "15+"};
  return names[bucket];
}

// Per-training-run accounting. Collected per worker and merged, so
// accumulation never needs synchronization.
struct TrainInstrumentation {
  std::vector<DepthAccum> by_depth;
  std::array<SplitPhaseTimes, kDepthBuckets> phases{};
  double split_seconds = 0.0;  // wall time inside split search, all phases plus glue
  double total_seconds = 0.0;

  void add_node(std::size_t depth, double seconds, std::uint64_t n_samples) {
    if (by_depth.size() <= depth) by_depth.resize(depth + 1);
    by_depth[depth].seconds += seconds;
    by_depth[depth].nodes += 1;
    by_depth[depth].samples += n_samples;
  }

  void merge(const TrainInstrumentation& o) {
    if (by_depth.size() < o.by_depth.size()) by_depth.resize(o.by_depth.size());
    for (std::size_t d = 0; d < o.by_depth.size(); ++d) {
      by_depth[d].seconds += o.by_depth[d].seconds;
      by_depth[d].nodes += o.by_depth[d].nodes;
      by_depth[d].samples += o.by_depth[d].samples;
    }
    for (std::size_t b = 0; b < kDepthBuckets; ++b) phases[b] += o.phases[b];
    split_seconds += o.split_seconds;
  }
};

}  // namespace soforest
