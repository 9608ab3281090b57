#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace soforest {

using Rng = std::mt19937_64;

// Finalizer from the splitmix64 generator. Bijective on 64-bit ints.
inline std::uint64_t split_mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives the seed of a child stream. Distinct (seed, key) pairs yield
// decorrelated streams regardless of how much the parent stream consumed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return split_mix64(seed ^ split_mix64(key + 0x632be59bd9b4e019ull));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(split_mix64(seed)); }

// Floyd's subset sampling: appends k distinct integers drawn uniformly from
// [0, n) to `out`, sorted ascending. O(k) draws, O(k^2) worst-case inserts;
// intended for small k (hundreds).
inline void floyd_sample_into(std::uint64_t n, std::uint64_t k, Rng& rng,
                              std::vector<std::uint64_t>& out) {
  out.clear();
  if (k == 0) return;
  if (k > n) k = n;
  for (std::uint64_t j = n - k; j < n; ++j) {
    std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, j)(rng);
    auto pos = std::lower_bound(out.begin(), out.end(), t);
    if (pos != out.end() && *pos == t) {
      out.push_back(j);  // j exceeds every element inserted so far
    } else {
      out.insert(pos, t);
    }
  }
}

inline std::vector<std::uint64_t> floyd_sample(std::uint64_t n, std::uint64_t k, Rng& rng) {
  std::vector<std::uint64_t> out;
  out.reserve(k);
  floyd_sample_into(n, k, rng, out);
  return out;
}

}  // namespace soforest
