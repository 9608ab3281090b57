#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "soforest/calibrate.hpp"
#include "soforest/dataset.hpp"
#include "soforest/parallel.hpp"
#include "soforest/projection.hpp"
#include "soforest/split.hpp"
#include "soforest/timing.hpp"

namespace soforest {

enum class SplitMode { kExactOnly, kHistogramOnly, kDynamic };

inline const char* split_mode_name(SplitMode m) {
  switch (m) {
    case SplitMode::kExactOnly: return "exact";
    case SplitMode::kHistogramOnly: return "histogram";
    case SplitMode::kDynamic: return "dynamic";
  }
  return "?";
}

inline std::optional<SplitMode> parse_split_mode(const std::string& name) {
  if (name == "exact") return SplitMode::kExactOnly;
  if (name == "histogram") return SplitMode::kHistogramOnly;
  if (name == "dynamic") return SplitMode::kDynamic;
  return std::nullopt;
}

struct TrainConfig {
  std::size_t n_trees = 100;
  SplitMode mode = SplitMode::kDynamic;
  std::size_t bin_count = 256;
  bool two_level_binning = true;
  std::optional<std::size_t> breakeven;  // Dynamic only; calibrated at startup when absent
  double bootstrap_fraction = 0.632;
  std::optional<std::size_t> max_depth;  // unlimited when absent
  std::size_t min_samples_split = 2;
  std::size_t max_split_retries = 1;     // projection resamples after a failed split
  std::size_t n_workers = 1;
  std::uint64_t seed = 0;
  CalibrationOptions calibration{};

  bool operator==(const TrainConfig&) const = default;
};

template <typename T>
struct TreeNode {
  SparseRow<T> projection;         // empty on leaves
  T threshold{};
  std::int32_t left = -1;          // children; -1 marks a leaf
  std::int32_t right = -1;
  std::int32_t predicted_class = -1;

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

template <typename T>
struct Tree {
  std::vector<TreeNode<T>> nodes;

  bool operator==(const Tree&) const = default;
};

template <typename T>
struct BasicForest {
  std::uint32_t n_features = 0;
  std::int32_t class_count = 0;
  std::vector<std::string> label_names;
  TrainConfig config{};
  std::size_t breakeven = 0;  // resolved value Dynamic training used
  std::optional<CrossoverCalibration> calibration;
  std::vector<Tree<T>> trees;
};

using Forest = BasicForest<float>;

template <typename T>
std::int32_t predict_tree(const Tree<T>& tree, std::span<const T> sample) {
  const TreeNode<T>* node = &tree.nodes[0];
  while (!node->is_leaf()) {
    double acc = 0.0;
    bool first = true;
    for (const auto& term : node->projection) {
      const double x = static_cast<double>(term.weight) * static_cast<double>(sample[term.feature]);
      acc = first ? x : acc + x;
      first = false;
    }
    const T v = static_cast<T>(acc);
    node = &tree.nodes[v <= node->threshold ? node->left : node->right];
  }
  return node->predicted_class;
}

struct Prediction {
  std::int32_t label = -1;
  std::vector<double> votes;  // per-class tree vote fractions, sums to 1
};

template <typename T>
Prediction predict(const BasicForest<T>& forest, std::span<const T> sample) {
  if (sample.size() != forest.n_features)
    throw std::invalid_argument("sample has " + std::to_string(sample.size()) +
                                " features, model expects " + std::to_string(forest.n_features));
  Prediction p;
  p.votes.assign(static_cast<std::size_t>(forest.class_count), 0.0);
  for (const auto& tree : forest.trees) p.votes[predict_tree(tree, sample)] += 1.0;
  for (double& v : p.votes) v /= static_cast<double>(forest.trees.size());
  p.label = static_cast<std::int32_t>(
      std::max_element(p.votes.begin(), p.votes.end()) - p.votes.begin());
  return p;
}

namespace detail {

template <typename T>
struct TreeGrower {
  const BasicColumnarDataset<T>& data;
  const TrainConfig& cfg;
  const ProjectionConfig& pcfg;
  std::size_t breakeven;
  SplitScratch<T>& scratch;
  TrainInstrumentation* instr;

  struct WorkItem {
    std::int32_t node;
    std::uint32_t begin;
    std::uint32_t end;
    std::uint32_t depth;
    std::uint64_t seed;
  };

  SplitMethod method_for(std::size_t n_active) const {
    switch (cfg.mode) {
      case SplitMode::kExactOnly: return SplitMethod::kExact;
      case SplitMode::kHistogramOnly: return SplitMethod::kHistogram;
      case SplitMode::kDynamic: return choose_method(n_active, breakeven);
    }
    return SplitMethod::kExact;
  }

  Tree<T> grow(std::uint64_t tree_seed) {
    SampleIndexSet bootstrap =
        bootstrap_sample(data, cfg.bootstrap_fraction, derive_seed(tree_seed, 0));
    return grow_from(std::move(bootstrap.indices), derive_seed(tree_seed, 1), 0);
  }

  Tree<T> grow_from(std::vector<std::uint32_t> idx, std::uint64_t root_seed,
                    std::uint32_t root_depth) {
    Tree<T> tree;
    const std::size_t k = static_cast<std::size_t>(data.class_count());
    std::vector<std::uint32_t> class_totals(k);
    std::vector<WorkItem> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, static_cast<std::uint32_t>(idx.size()), root_depth, root_seed});

    while (!stack.empty()) {
      const WorkItem item = stack.back();
      stack.pop_back();
      Stopwatch node_clock;
      const std::size_t n = item.end - item.begin;
      const std::span<const std::uint32_t> active(idx.data() + item.begin, n);

      std::fill(class_totals.begin(), class_totals.end(), 0u);
      for (std::uint32_t s : active) class_totals[data.labels()[s]]++;
      const std::uint32_t top =
          *std::max_element(class_totals.begin(), class_totals.end());

      const bool can_split = top < n && n >= cfg.min_samples_split && n >= 2 &&
                             (!cfg.max_depth || item.depth < *cfg.max_depth);

      bool made_split = false;
      if (can_split) {
        Rng engine = make_rng(item.seed);
        SplitPhaseTimes* phases = instr ? &instr->phases[depth_bucket(item.depth)] : nullptr;
        NodeSplitOptions options{method_for(n), cfg.bin_count, cfg.two_level_binning};

        for (std::size_t attempt = 0; attempt <= cfg.max_split_retries && !made_split; ++attempt) {
          Stopwatch split_clock;
          ProjectionMatrix<T> projections = sample_projection_matrix<T>(pcfg, engine);
          if (phases) phases->sample_projections += split_clock.seconds();

          auto split = find_node_split(data, active, projections, options, engine, scratch, phases);
          if (instr) instr->split_seconds += split_clock.seconds();
          if (!split) continue;

          // The winning row's projected values are still in the arena.
          const T* values =
              scratch.values.data() + split->candidate.projection_index * n;
          const T threshold = split->candidate.threshold;
          auto& spill = scratch.partition_tmp;
          spill.clear();
          std::uint32_t write = item.begin;
          for (std::size_t j = 0; j < n; ++j) {
            const std::uint32_t s = idx[item.begin + j];
            if (values[j] <= threshold)
              idx[write++] = s;
            else
              spill.push_back(s);
          }
          const std::uint32_t n_left = write - item.begin;
          if (n_left == 0 || n_left == n) continue;
          std::copy(spill.begin(), spill.end(), idx.begin() + write);

          const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
          const auto right_id = left_id + 1;
          {
            TreeNode<T>& parent = tree.nodes[item.node];
            parent.projection = std::move(split->projection);
            parent.threshold = threshold;
            parent.left = left_id;
            parent.right = right_id;
          }
          tree.nodes.emplace_back();
          tree.nodes.emplace_back();
          stack.push_back({right_id, item.begin + n_left, item.end, item.depth + 1,
                           derive_seed(item.seed, 2)});
          stack.push_back({left_id, item.begin, item.begin + n_left, item.depth + 1,
                           derive_seed(item.seed, 1)});
          made_split = true;
        }
      }

      if (!made_split) {
        tree.nodes[item.node].predicted_class = static_cast<std::int32_t>(
            std::max_element(class_totals.begin(), class_totals.end()) - class_totals.begin());
      }
      if (instr) instr->add_node(item.depth, node_clock.seconds(), n);
    }
    return tree;
  }
};

}  // namespace detail

// Trains a single tree over the given sample set. `seed` feeds the root of a
// splittable per-node random stream; `depth` offsets depth accounting and the
// max_depth cutoff. Dynamic mode uses cfg.breakeven when set and the
// calibration fallback otherwise; train_forest resolves auto-calibration
// before delegating here.
template <typename T>
Tree<T> train_tree(const BasicColumnarDataset<T>& data, const SampleIndexSet& active,
                   const TrainConfig& cfg, std::uint64_t seed, std::size_t depth = 0,
                   TrainInstrumentation* instr = nullptr) {
  if (active.indices.empty()) throw std::invalid_argument("active sample set is empty");
  for (std::uint32_t s : active.indices)
    if (s >= data.n_samples()) throw std::out_of_range("sample index out of range");
  const ProjectionConfig pcfg = ProjectionConfig::for_features(data.n_features());
  const std::size_t breakeven = cfg.breakeven ? *cfg.breakeven : kFallbackBreakeven;
  SplitScratch<T> scratch;
  detail::TreeGrower<T> grower{data, cfg, pcfg, breakeven, scratch, instr};
  return grower.grow_from(active.indices, seed, static_cast<std::uint32_t>(depth));
}

// Trains cfg.n_trees independent trees over bootstrap subsets. Tree t is a
// pure function of (dataset, config, seed, t), so results do not depend on
// the worker count.
template <typename T>
BasicForest<T> train_forest(const BasicColumnarDataset<T>& data, const TrainConfig& cfg,
                            TrainInstrumentation* instr = nullptr) {
  if (cfg.n_trees < 1) throw std::invalid_argument("n_trees must be positive");
  if (cfg.bin_count < 2) throw std::invalid_argument("bin_count must be at least 2");
  if (cfg.min_samples_split < 2) throw std::invalid_argument("min_samples_split must be at least 2");
  if (!(cfg.bootstrap_fraction > 0.0) || cfg.bootstrap_fraction > 1.0)
    throw std::invalid_argument("bootstrap fraction must be in (0, 1]");
  if (data.n_samples() < 2) throw std::invalid_argument("need at least 2 samples");
  if (data.class_count() < 2) throw std::invalid_argument("need at least 2 classes");

  Stopwatch total;
  BasicForest<T> forest;
  forest.n_features = static_cast<std::uint32_t>(data.n_features());
  forest.class_count = data.class_count();
  forest.label_names = data.label_names();
  forest.config = cfg;

  if (cfg.mode == SplitMode::kDynamic) {
    if (cfg.breakeven) {
      forest.breakeven = *cfg.breakeven;
    } else {
      CrossoverCalibration cal = calibrate_crossover<T>(cfg.calibration);
      forest.breakeven = cal.breakeven;
      forest.calibration = std::move(cal);
    }
  }

  const ProjectionConfig pcfg = ProjectionConfig::for_features(data.n_features());
  const std::size_t workers = cfg.n_workers < 1 ? 1 : cfg.n_workers;

  forest.trees.resize(cfg.n_trees);
  std::vector<SplitScratch<T>> scratches(workers);
  std::vector<TrainInstrumentation> worker_instr(instr ? workers : 0);

  parallel_for(cfg.n_trees, workers, [&](std::size_t t, std::size_t w) {
    detail::TreeGrower<T> grower{data,    cfg,          pcfg,
                                 forest.breakeven, scratches[w], instr ? &worker_instr[w] : nullptr};
    forest.trees[t] = grower.grow(derive_seed(cfg.seed, t + 1));
  });

  if (instr) {
    for (const auto& wi : worker_instr) instr->merge(wi);
    instr->total_seconds = total.seconds();
  }
  return forest;
}

}  // namespace soforest
