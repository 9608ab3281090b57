#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "soforest/dataset.hpp"
#include "soforest/histogram.hpp"
#include "soforest/projection.hpp"
#include "soforest/random.hpp"
#include "soforest/timing.hpp"

namespace soforest {

// Shannon entropy of a class-count vector, in bits.
inline double entropy(std::span<const std::uint32_t> counts) {
  double n = 0.0;
  for (std::uint32_t c : counts) n += c;
  if (n == 0.0) return 0.0;
  double h = 0.0;
  for (std::uint32_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

template <typename T>
struct SplitCandidate {
  std::size_t projection_index = 0;
  T threshold{};
  double gain = 0.0;  // information gain in bits
  std::uint32_t n_left = 0;
  std::uint32_t n_right = 0;
};

enum class SplitMethod { kExact, kHistogram };

// Histogram path uses the breakeven size measured at startup: sorting wins
// on small nodes, binning on large ones.
inline SplitMethod choose_method(std::size_t n_active, std::size_t breakeven) {
  return n_active > breakeven ? SplitMethod::kHistogram : SplitMethod::kExact;
}

namespace detail {

// c * log2(c) memoized over integer counts; grown on demand. Split scans
// evaluate entropies thousands of times over the same small count range,
// so the lookup replaces four log calls per candidate.
inline double xlogx(std::uint64_t c) {
  thread_local std::vector<double> table{0.0, 0.0};
  while (table.size() <= c) {
    const double x = static_cast<double>(table.size());
    table.push_back(x * std::log2(x));
  }
  return table[c];
}

// Information gain of a left/right decomposition, using the identity
// (nl/n) * H(left) = (f(nl) - sum_k f(left_k)) / n with f = xlogx.
inline double gain_from_counts(std::span<const std::uint32_t> left,
                               std::span<const std::uint32_t> total, std::uint64_t nl,
                               std::uint64_t nr, double parent_entropy) {
  double sl = 0.0, sr = 0.0;
  for (std::size_t k = 0; k < left.size(); ++k) {
    sl += xlogx(left[k]);
    sr += xlogx(total[k] - left[k]);
  }
  const double n = static_cast<double>(nl + nr);
  return parent_entropy - (xlogx(nl) - sl + xlogx(nr) - sr) / n;
}

}  // namespace detail

// Scans histogram boundaries left to right and keeps the first boundary
// with the highest information gain. Returns none when no boundary yields
// positive gain.
template <typename T>
std::optional<SplitCandidate<T>> best_split_histogram(std::span<const T> boundaries,
                                                      std::span<const std::uint32_t> counts,
                                                      std::int32_t class_count,
                                                      std::size_t projection_index = 0) {
  if (boundaries.empty()) return std::nullopt;
  const std::size_t k = static_cast<std::size_t>(class_count);
  const std::size_t n_bins = boundaries.size() + 1;
  if (counts.size() != n_bins * k) throw std::invalid_argument("counts span has the wrong size");

  thread_local std::vector<std::uint32_t> total, left;
  total.assign(k, 0u);
  left.assign(k, 0u);
  for (std::size_t b = 0; b < n_bins; ++b)
    for (std::size_t c = 0; c < k; ++c) total[c] += counts[b * k + c];

  double n = 0.0;
  for (std::uint32_t c : total) n += c;
  if (n < 2.0) return std::nullopt;
  const double parent = entropy(total);

  std::optional<SplitCandidate<T>> best;
  std::uint64_t nl = 0;
  for (std::size_t b = 0; b + 1 < n_bins; ++b) {
    for (std::size_t c = 0; c < k; ++c) {
      left[c] += counts[b * k + c];
      nl += counts[b * k + c];
    }
    const std::uint64_t nr = static_cast<std::uint64_t>(n) - nl;
    if (nl == 0 || nr == 0) continue;
    const double gain = detail::gain_from_counts(left, total, nl, nr, parent);
    if (gain > 0.0 && (!best || gain > best->gain)) {
      best = SplitCandidate<T>{projection_index, boundaries[b], gain,
                               static_cast<std::uint32_t>(nl), static_cast<std::uint32_t>(nr)};
    }
  }
  return best;
}

namespace detail {

// Order-preserving mapping from float bits to unsigned ints, so projected
// values sort with one integer key.
inline std::uint32_t order_key(float v) {
  const auto b = std::bit_cast<std::uint32_t>(v);
  return b & 0x80000000u ? ~b : b | 0x80000000u;
}

inline float order_key_inverse(std::uint32_t key) {
  const std::uint32_t b = key & 0x80000000u ? key & 0x7fffffffu : ~key;
  return std::bit_cast<float>(b);
}

}  // namespace detail

// Sorts the values and evaluates every midpoint between consecutive
// distinct values. Ties on gain keep the smallest threshold. Returns none
// when all values are equal or no candidate has positive gain.
template <typename T>
std::optional<SplitCandidate<T>> best_split_exact(std::span<const T> values,
                                                  std::span<const std::int32_t> labels,
                                                  std::int32_t class_count,
                                                  std::size_t projection_index = 0) {
  const std::size_t n = values.size();
  if (n != labels.size()) throw std::invalid_argument("values and labels differ in length");
  if (n < 2) return std::nullopt;
  const std::size_t k = static_cast<std::size_t>(class_count);

  thread_local std::vector<std::uint32_t> total, left;
  total.assign(k, 0u);
  left.assign(k, 0u);
  for (std::int32_t y : labels) total[y]++;

  double parent = entropy(total);
  std::optional<SplitCandidate<T>> best;

  auto scan = [&](auto value_at, auto label_at) {
    for (std::size_t j = 1; j < n; ++j) {
      left[label_at(j - 1)]++;
      const T a = value_at(j - 1);
      const T b = value_at(j);
      if (!(a < b)) continue;
      const double gain = detail::gain_from_counts(left, total, j, n - j, parent);
      if (gain > 0.0 && (!best || gain > best->gain)) {
        best = SplitCandidate<T>{projection_index, detail::midpoint_down(a, b), gain,
                                 static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(n - j)};
      }
    }
  };

  if constexpr (std::is_same_v<T, float>) {
    // Pack (value, label) into one 64-bit key; the sort then runs on plain
    // integers. Equal floats (-0.0/+0.0) may straddle keys, so grouping
    // below compares decoded floats, not keys.
    thread_local std::vector<std::uint64_t> keys;
    keys.resize(n);
    for (std::size_t j = 0; j < n; ++j)
      keys[j] = (static_cast<std::uint64_t>(detail::order_key(values[j])) << 32) |
                static_cast<std::uint32_t>(labels[j]);
    std::sort(keys.begin(), keys.end());
    scan([&](std::size_t j) { return detail::order_key_inverse(keys[j] >> 32); },
         [&](std::size_t j) { return static_cast<std::int32_t>(keys[j] & 0xffffffffu); });
  } else {
    thread_local std::vector<std::pair<T, std::int32_t>> pairs;
    pairs.resize(n);
    for (std::size_t j = 0; j < n; ++j) pairs[j] = {values[j], labels[j]};
    std::sort(pairs.begin(), pairs.end());
    scan([&](std::size_t j) { return pairs[j].first; },
         [&](std::size_t j) { return pairs[j].second; });
  }
  return best;
}

// Reusable per-worker buffers for node split searches. Sized for the first
// (largest) node and reused down the tree; only the regions belonging to
// the current node are touched.
template <typename T>
struct SplitScratch {
  std::vector<double> accum;
  std::vector<T> values;               // num_projections * n, row-major
  std::vector<T> boundaries;           // num_projections * (bin_count - 1)
  std::vector<std::size_t> n_boundaries;
  std::vector<std::uint32_t> counts;   // num_projections * bin_count * class_count
  std::vector<std::int32_t> labels;    // labels gathered for the active set
  std::vector<std::uint32_t> partition_tmp;
};

template <typename T>
struct NodeSplit {
  SplitCandidate<T> candidate;
  SparseRow<T> projection;
};

struct NodeSplitOptions {
  SplitMethod method = SplitMethod::kExact;
  std::size_t bin_count = 256;
  bool two_level = true;  // applies when bin_count - 1 has a two-level layout
};

// Evaluates every projection row against the node's active samples and
// returns the best candidate, or none when nothing attains positive gain.
// Work runs phase-major (all applies, then all histograms, then all
// evaluations) so per-phase timing costs eight clock reads per node.
// After return, scratch.values row `candidate.projection_index` still holds
// the winning row's projected values for partitioning.
template <typename T>
std::optional<NodeSplit<T>> find_node_split(const BasicColumnarDataset<T>& data,
                                            std::span<const std::uint32_t> active,
                                            const ProjectionMatrix<T>& projections,
                                            const NodeSplitOptions& options, Rng& rng,
                                            SplitScratch<T>& scratch,
                                            SplitPhaseTimes* phases = nullptr) {
  const std::size_t n = active.size();
  const std::size_t n_rows = projections.rows.size();
  const std::size_t k = static_cast<std::size_t>(data.class_count());
  if (n < 2) return std::nullopt;
  if (options.bin_count < 2) throw std::invalid_argument("bin_count must be at least 2");

  Stopwatch clock;

  if (scratch.values.size() < n_rows * n) scratch.values.resize(n_rows * n);
  if (scratch.labels.size() < n) scratch.labels.resize(n);
  const std::int32_t* all_labels = data.labels().data();
  for (std::size_t j = 0; j < n; ++j) scratch.labels[j] = all_labels[active[j]];
  for (std::size_t r = 0; r < n_rows; ++r) {
    apply_projection(data, projections.rows[r], active,
                     std::span<T>(scratch.values.data() + r * n, n), scratch.accum);
  }
  if (phases) {
    phases->apply_projections += clock.seconds();
    clock.reset();
  }

  std::span<const std::int32_t> labels(scratch.labels.data(), n);
  std::optional<NodeSplit<T>> best;

  auto consider = [&](std::optional<SplitCandidate<T>> cand, std::size_t r) {
    if (cand && (!best || cand->gain > best->candidate.gain)) {
      best = NodeSplit<T>{*cand, projections.rows[r]};
    }
  };

  if (options.method == SplitMethod::kHistogram) {
    const std::size_t max_bnd = options.bin_count - 1;
    if (scratch.boundaries.size() < n_rows * max_bnd) scratch.boundaries.resize(n_rows * max_bnd);
    if (scratch.n_boundaries.size() < n_rows) scratch.n_boundaries.resize(n_rows);
    if (scratch.counts.size() < n_rows * options.bin_count * k)
      scratch.counts.resize(n_rows * options.bin_count * k);

    for (std::size_t r = 0; r < n_rows; ++r) {
      scratch.n_boundaries[r] =
          sample_boundaries(std::span<const T>(scratch.values.data() + r * n, n),
                            options.bin_count, rng, scratch.boundaries.data() + r * max_bnd);
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      const std::size_t nb = scratch.n_boundaries[r];
      if (nb == 0) continue;
      const BinningImpl impl = options.two_level && TwoLevelTable<T>::supports(nb)
                                   ? BinningImpl::kTwoLevel
                                   : BinningImpl::kScalar;
      build_histogram(std::span<const T>(scratch.values.data() + r * n, n), labels,
                      std::span<const T>(scratch.boundaries.data() + r * max_bnd, nb),
                      data.class_count(),
                      std::span<std::uint32_t>(scratch.counts.data() + r * options.bin_count * k,
                                               (nb + 1) * k),
                      impl);
    }
    if (phases) {
      phases->build_histograms += clock.seconds();
      clock.reset();
    }

    for (std::size_t r = 0; r < n_rows; ++r) {
      const std::size_t nb = scratch.n_boundaries[r];
      if (nb == 0) continue;
      consider(best_split_histogram(
                   std::span<const T>(scratch.boundaries.data() + r * max_bnd, nb),
                   std::span<const std::uint32_t>(scratch.counts.data() + r * options.bin_count * k,
                                                  (nb + 1) * k),
                   data.class_count(), r),
               r);
    }
    if (phases) phases->evaluate_splits += clock.seconds();
  } else {
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (projections.rows[r].empty()) continue;
      consider(best_split_exact(std::span<const T>(scratch.values.data() + r * n, n), labels,
                                data.class_count(), r),
               r);
    }
    if (phases) phases->evaluate_splits += clock.seconds();
  }

  return best;
}

}  // namespace soforest
