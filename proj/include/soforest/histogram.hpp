#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "soforest/random.hpp"

#if defined(__AVX2__) || defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace soforest {

namespace detail {

// Midpoint that never reaches b; when rounding would land on b, falls back
// to a so the result stays inside [a, b).
template <typename T>
T midpoint_down(T a, T b) {
  T t = a + (b - a) / T{2};
  if (!(t < b)) t = a;
  return t;
}

}  // namespace detail

// Draws boundaries for a histogram over `values`: samples min(bin_count, n)
// positions without replacement, sorts the drawn values, and emits the
// midpoint of every consecutive pair of distinct drawn values. Writes at
// most bin_count - 1 boundaries to `out`, returns how many. Boundaries are
// strictly increasing.
template <typename T>
std::size_t sample_boundaries(std::span<const T> values, std::size_t bin_count, Rng& rng,
                              T* out) {
  if (bin_count < 1) throw std::invalid_argument("bin_count must be positive");
  const std::size_t n = values.size();
  if (n < 2 || bin_count < 2) return 0;

  const std::size_t m = std::min(bin_count, n);
  thread_local std::vector<T> drawn;
  drawn.resize(m);
  if (m == n) {
    std::copy(values.begin(), values.end(), drawn.begin());
  } else {
    thread_local std::vector<std::uint64_t> picks;
    floyd_sample_into(n, m, rng, picks);
    for (std::size_t i = 0; i < m; ++i) drawn[i] = values[picks[i]];
  }
  std::sort(drawn.begin(), drawn.end());

  std::size_t k = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (drawn[i - 1] < drawn[i]) out[k++] = detail::midpoint_down(drawn[i - 1], drawn[i]);
  }
  return k;
}

template <typename T>
std::vector<T> sample_boundaries(std::span<const T> values, std::size_t bin_count, Rng& rng) {
  std::vector<T> out(bin_count > 0 ? bin_count - 1 : 0);
  out.resize(sample_boundaries(values, bin_count, rng, out.data()));
  return out;
}

// Bin of v given sorted boundaries: the number of boundaries <= v.
template <typename T>
std::size_t bin_index_scalar(std::span<const T> boundaries, T v) {
  return static_cast<std::size_t>(
      std::upper_bound(boundaries.begin(), boundaries.end(), v) - boundaries.begin());
}

// Bin lookup split into a coarse pass over every group_size-th boundary and
// a fine pass inside the selected group. Both passes are fixed-width
// compare-and-count sweeps (no data-dependent branches), padded with +inf.
// Supports 63 boundaries (8x8) and 255 boundaries (16x16); lookups match
// bin_index_scalar for every finite input.
template <typename T>
struct TwoLevelTable {
  static constexpr std::size_t kMaxGroup = 16;

  std::size_t group_size = 0;
  std::size_t n_boundaries = 0;
  alignas(64) T coarse[kMaxGroup];
  alignas(64) T fine[kMaxGroup * kMaxGroup];

  static bool supports(std::size_t boundary_count) {
    return boundary_count == 63 || boundary_count == 255;
  }

  void build(std::span<const T> boundaries) {
    if (!supports(boundaries.size()))
      throw std::invalid_argument("two-level table needs 63 or 255 boundaries");
    n_boundaries = boundaries.size();
    group_size = n_boundaries == 255 ? 16 : 8;
    const T inf = std::numeric_limits<T>::infinity();
    const std::size_t g = group_size;

    for (std::size_t j = 0; j < g; ++j) {
      const std::size_t idx = (j + 1) * g - 1;
      coarse[j] = idx < n_boundaries ? boundaries[idx] : inf;
    }
    for (std::size_t grp = 0; grp < g; ++grp) {
      for (std::size_t i = 0; i < g; ++i) {
        const std::size_t idx = grp * g + i;
        fine[grp * g + i] = i + 1 < g ? boundaries[idx] : inf;
      }
    }
  }
};

// Portable two-level lookup; compiled on every target.
template <typename T>
std::size_t bin_index_two_level_generic(const TwoLevelTable<T>& t, T v) {
  const std::size_t g = t.group_size;
  std::size_t coarse = 0;
  for (std::size_t j = 0; j < g; ++j) coarse += t.coarse[j] <= v ? 1 : 0;
  if (coarse >= g) coarse = g - 1;
  const T* grp = t.fine + coarse * g;
  std::size_t local = 0;
  for (std::size_t i = 0; i < g; ++i) local += grp[i] <= v ? 1 : 0;
  const std::size_t bin = coarse * g + local;
  return bin < t.n_boundaries ? bin : t.n_boundaries;
}

#if defined(__AVX2__)
namespace detail {

inline unsigned count_le_8(const float* p, __m256 vv) {
  const __m256 cmp = _mm256_cmp_ps(_mm256_load_ps(p), vv, _CMP_LE_OQ);
  return std::popcount(static_cast<unsigned>(_mm256_movemask_ps(cmp)));
}

inline std::size_t two_level_lookup_f32(const TwoLevelTable<float>& t, float v) {
  const __m256 vv = _mm256_set1_ps(v);
  if (t.group_size == 16) {
#if defined(__AVX512F__)
    const __m512 wv = _mm512_set1_ps(v);
    unsigned coarse = std::popcount(static_cast<unsigned>(
        _mm512_cmp_ps_mask(_mm512_load_ps(t.coarse), wv, _CMP_LE_OQ)));
    if (coarse >= 16) coarse = 15;
    const unsigned local = std::popcount(static_cast<unsigned>(
        _mm512_cmp_ps_mask(_mm512_load_ps(t.fine + coarse * 16), wv, _CMP_LE_OQ)));
#else
    unsigned coarse = count_le_8(t.coarse, vv) + count_le_8(t.coarse + 8, vv);
    if (coarse >= 16) coarse = 15;
    const float* grp = t.fine + coarse * 16;
    const unsigned local = count_le_8(grp, vv) + count_le_8(grp + 8, vv);
#endif
    const std::size_t bin = coarse * 16 + local;
    return bin < t.n_boundaries ? bin : t.n_boundaries;
  }
  unsigned coarse = count_le_8(t.coarse, vv);
  if (coarse >= 8) coarse = 7;
  const unsigned local = count_le_8(t.fine + coarse * 8, vv);
  const std::size_t bin = coarse * 8 + local;
  return bin < t.n_boundaries ? bin : t.n_boundaries;
}

}  // namespace detail
#endif  // __AVX2__

template <typename T>
std::size_t bin_index_two_level(const TwoLevelTable<T>& t, T v) {
#if defined(__AVX2__)
  if constexpr (std::is_same_v<T, float>) return detail::two_level_lookup_f32(t, v);
#endif
  return bin_index_two_level_generic(t, v);
}

enum class BinningImpl { kAuto, kScalar, kTwoLevel };

// Fills per-bin class counts. `counts` must have (boundaries.size() + 1) *
// class_count entries; it is zeroed here, so arenas reset in O(bins*classes).
template <typename T>
void build_histogram(std::span<const T> values, std::span<const std::int32_t> labels,
                     std::span<const T> boundaries, std::int32_t class_count,
                     std::span<std::uint32_t> counts, BinningImpl impl = BinningImpl::kAuto) {
  if (values.size() != labels.size())
    throw std::invalid_argument("values and labels differ in length");
  if (class_count < 1) throw std::invalid_argument("class_count must be positive");
  const std::size_t k = static_cast<std::size_t>(class_count);
  const std::size_t n_bins = boundaries.size() + 1;
  if (counts.size() != n_bins * k)
    throw std::invalid_argument("counts span has the wrong size");

  std::fill(counts.begin(), counts.end(), 0u);

  if (impl == BinningImpl::kAuto)
    impl = TwoLevelTable<T>::supports(boundaries.size()) ? BinningImpl::kTwoLevel
                                                         : BinningImpl::kScalar;

  if (impl == BinningImpl::kTwoLevel) {
    TwoLevelTable<T> table;
    table.build(boundaries);
    for (std::size_t j = 0; j < values.size(); ++j)
      counts[bin_index_two_level(table, values[j]) * k + labels[j]]++;
  } else {
    for (std::size_t j = 0; j < values.size(); ++j)
      counts[bin_index_scalar(boundaries, values[j]) * k + labels[j]]++;
  }
}

template <typename T>
struct Histogram {
  std::vector<T> boundaries;
  std::vector<std::uint32_t> counts;  // bin-major: counts[bin * class_count + class]
  std::int32_t class_count = 0;

  std::size_t bin_count() const { return boundaries.size() + 1; }
  std::span<const std::uint32_t> bin(std::size_t b) const {
    return std::span<const std::uint32_t>(counts).subspan(
        b * static_cast<std::size_t>(class_count), static_cast<std::size_t>(class_count));
  }
};

template <typename T>
Histogram<T> build_histogram(std::span<const T> values, std::span<const std::int32_t> labels,
                             std::vector<T> boundaries, std::int32_t class_count,
                             BinningImpl impl = BinningImpl::kAuto) {
  Histogram<T> h;
  h.boundaries = std::move(boundaries);
  h.class_count = class_count;
  h.counts.assign(h.bin_count() * static_cast<std::size_t>(class_count), 0u);
  build_histogram(values, labels, std::span<const T>(h.boundaries), class_count,
                  std::span<std::uint32_t>(h.counts), impl);
  return h;
}

}  // namespace soforest
