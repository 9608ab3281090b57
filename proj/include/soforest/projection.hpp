#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "soforest/dataset.hpp"
#include "soforest/random.hpp"

namespace soforest {

template <typename T>
struct ProjectionTerm {
  std::uint32_t feature = 0;
  T weight{};

  bool operator==(const ProjectionTerm&) const = default;
};

// One oblique direction: a sparse linear combination of input features.
template <typename T>
using SparseRow = std::vector<ProjectionTerm<T>>;

template <typename T>
struct ProjectionMatrix {
  std::vector<SparseRow<T>> rows;
};

struct ProjectionConfig {
  std::size_t n_features = 0;
  std::size_t num_projections = 0;        // candidate directions per node
  std::size_t expected_nonzeros = 0;      // mean total nonzero cells per matrix
  double cell_density = 0.0;              // expected_nonzeros / (num_projections * n_features)

  // Defaults scale with sqrt(d): ceil(1.5*sqrt(d)) directions and
  // round(3*sqrt(d)) expected nonzeros, i.e. cell density 2/d.
  static ProjectionConfig for_features(std::size_t d) {
    if (d == 0) throw std::invalid_argument("n_features must be positive");
    const double sd = std::sqrt(static_cast<double>(d));
    ProjectionConfig cfg;
    cfg.n_features = d;
    cfg.num_projections = static_cast<std::size_t>(std::ceil(1.5 * sd));
    cfg.expected_nonzeros = static_cast<std::size_t>(std::llround(3.0 * sd));
    cfg.cell_density = std::min(
        1.0, static_cast<double>(cfg.expected_nonzeros) /
                 (static_cast<double>(cfg.num_projections) * static_cast<double>(d)));
    return cfg;
  }
};

// Samples a sparse matrix in two steps: the total nonzero count is one
// binomial draw over all cells, then that many distinct cells are picked
// uniformly (Floyd). Equivalent in distribution to flipping an independent
// biased coin per cell, but O(nonzeros) instead of O(cells).
template <typename T = float>
ProjectionMatrix<T> sample_projection_matrix(const ProjectionConfig& cfg, Rng& rng) {
  if (cfg.n_features == 0 || cfg.num_projections == 0)
    throw std::invalid_argument("projection config is empty");
  if (!(cfg.cell_density >= 0.0) || cfg.cell_density > 1.0)
    throw std::invalid_argument("cell density must be in [0, 1]");

  const std::uint64_t cells =
      static_cast<std::uint64_t>(cfg.num_projections) * cfg.n_features;
  std::binomial_distribution<long long> total(static_cast<long long>(cells), cfg.cell_density);
  const std::uint64_t z = static_cast<std::uint64_t>(total(rng));

  ProjectionMatrix<T> m;
  m.rows.assign(cfg.num_projections, {});

  thread_local std::vector<std::uint64_t> chosen;
  floyd_sample_into(cells, z, rng, chosen);

  std::uniform_int_distribution<int> coin(0, 1);
  for (std::uint64_t cell : chosen) {
    const auto r = static_cast<std::size_t>(cell / cfg.n_features);
    const auto f = static_cast<std::uint32_t>(cell % cfg.n_features);
    m.rows[r].push_back({f, coin(rng) ? T{1} : T{-1}});
  }
  return m;
}

// out[j] = sum over the row's terms of weight * column[active[j]].
// Accumulates in double regardless of T.
template <typename T>
void apply_projection(const BasicColumnarDataset<T>& data, const SparseRow<T>& row,
                      std::span<const std::uint32_t> active, std::span<T> out,
                      std::vector<double>& accum) {
  const std::size_t n = active.size();
  if (out.size() != n) throw std::invalid_argument("output size does not match active set");
  if (row.empty()) {
    std::fill(out.begin(), out.end(), T{0});
    return;
  }
  if (accum.size() < n) accum.resize(n);

  for (std::size_t t = 0; t < row.size(); ++t) {
    const T* col = data.column(row[t].feature).data();
    const double w = static_cast<double>(row[t].weight);
    if (t == 0) {
      for (std::size_t j = 0; j < n; ++j) accum[j] = w * static_cast<double>(col[active[j]]);
    } else {
      for (std::size_t j = 0; j < n; ++j) accum[j] += w * static_cast<double>(col[active[j]]);
    }
  }
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<T>(accum[j]);
}

template <typename T>
std::vector<T> apply_projection(const BasicColumnarDataset<T>& data, const SparseRow<T>& row,
                                const SampleIndexSet& active) {
  std::vector<T> out(active.size());
  std::vector<double> accum;
  apply_projection(data, row, std::span<const std::uint32_t>(active.indices), std::span<T>(out),
                   accum);
  return out;
}

}  // namespace soforest
