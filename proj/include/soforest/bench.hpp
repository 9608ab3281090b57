#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "soforest/forest.hpp"
#include "soforest/timing.hpp"

namespace soforest {

struct DepthProfileRow {
  std::size_t depth = 0;
  std::string mode;
  double seconds = 0.0;
  std::uint64_t nodes = 0;
  std::uint64_t samples = 0;
};

struct PhaseProfileRow {
  std::string phase;
  std::string depth_bucket;
  double seconds = 0.0;
};

struct ModeComparisonRow {
  std::string mode;
  double seconds = 0.0;
  double normalized = 0.0;  // relative to the exact-only run
};

namespace detail {

inline void csv_number(std::ostream& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

// Dynamic-mode runs inside one harness call share a single calibration so
// their trees are comparable.
template <typename T>
TrainConfig resolved(const BasicColumnarDataset<T>&, const TrainConfig& base) {
  TrainConfig cfg = base;
  if (!cfg.breakeven) cfg.breakeven = calibrate_crossover<T>(cfg.calibration).breakeven;
  return cfg;
}

}  // namespace detail

// Trains once per split mode and reports where the time goes by tree depth.
template <typename T>
std::vector<DepthProfileRow> bench_depth_profile(const BasicColumnarDataset<T>& data,
                                                 const TrainConfig& base) {
  const TrainConfig cfg = detail::resolved(data, base);
  std::vector<DepthProfileRow> rows;
  for (SplitMode mode :
       {SplitMode::kExactOnly, SplitMode::kHistogramOnly, SplitMode::kDynamic}) {
    TrainConfig c = cfg;
    c.mode = mode;
    TrainInstrumentation instr;
    train_forest(data, c, &instr);
    for (std::size_t d = 0; d < instr.by_depth.size(); ++d) {
      const DepthAccum& a = instr.by_depth[d];
      rows.push_back({d, split_mode_name(mode), a.seconds, a.nodes, a.samples});
    }
  }
  return rows;
}

// Trains with the given config and reports split-search time by phase and
// depth bucket.
template <typename T>
std::vector<PhaseProfileRow> bench_phase_profile(const BasicColumnarDataset<T>& data,
                                                 const TrainConfig& base) {
  const TrainConfig cfg = detail::resolved(data, base);
  TrainInstrumentation instr;
  train_forest(data, cfg, &instr);

  std::vector<PhaseProfileRow> rows;
  for (std::size_t b = 0; b < kDepthBuckets; ++b) {
    const SplitPhaseTimes& p = instr.phases[b];
    const char* bucket = depth_bucket_name(b);
    rows.push_back({"sample_projections", bucket, p.sample_projections});
    rows.push_back({"apply_projections", bucket, p.apply_projections});
    rows.push_back({"build_histograms", bucket, p.build_histograms});
    rows.push_back({"evaluate_splits", bucket, p.evaluate_splits});
  }
  return rows;
}

// Wall-clock comparison of the four training setups on identical seeds.
template <typename T>
std::vector<ModeComparisonRow> bench_mode_comparison(const BasicColumnarDataset<T>& data,
                                                     const TrainConfig& base) {
  const TrainConfig cfg = detail::resolved(data, base);

  struct Run {
    const char* name;
    SplitMode mode;
    bool two_level;
  };
  constexpr Run runs[] = {
      {"exact", SplitMode::kExactOnly, true},
      {"histogram", SplitMode::kHistogramOnly, true},
      {"dynamic_scalar", SplitMode::kDynamic, false},
      {"dynamic_two_level", SplitMode::kDynamic, true},
  };

  std::vector<ModeComparisonRow> rows;
  for (const Run& run : runs) {
    TrainConfig c = cfg;
    c.mode = run.mode;
    c.two_level_binning = run.two_level;
    Stopwatch clock;
    train_forest(data, c);
    rows.push_back({run.name, clock.seconds(), 0.0});
  }
  const double exact_seconds = rows[0].seconds;
  for (auto& row : rows) row.normalized = row.seconds / exact_seconds;
  return rows;
}

inline void write_csv(const std::vector<DepthProfileRow>& rows, std::ostream& out) {
  out << "depth,mode,seconds,nodes,samples\n";
  for (const auto& r : rows) {
    out << r.depth << ',' << r.mode << ',';
    detail::csv_number(out, r.seconds);
    out << ',' << r.nodes << ',' << r.samples << '\n';
  }
}

inline void write_csv(const std::vector<PhaseProfileRow>& rows, std::ostream& out) {
  out << "phase,depth_bucket,seconds\n";
  for (const auto& r : rows) {
    out << r.phase << ',' << r.depth_bucket << ',';
    detail::csv_number(out, r.seconds);
    out << '\n';
  }
}

inline void write_csv(const std::vector<ModeComparisonRow>& rows, std::ostream& out) {
  out << "mode,seconds,normalized\n";
  for (const auto& r : rows) {
    out << r.mode << ',';
    detail::csv_number(out, r.seconds);
    out << ',';
    detail::csv_number(out, r.normalized);
    out << '\n';
  }
}

}  // namespace soforest
