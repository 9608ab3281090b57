#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "soforest/random.hpp"

namespace soforest {

// Feature-major dataset: one contiguous array per feature so that a split
// evaluation touches only the columns its projection uses.
template <typename T>
class BasicColumnarDataset {
 public:
  BasicColumnarDataset() = default;

  BasicColumnarDataset(std::vector<std::vector<T>> columns, std::vector<std::int32_t> labels,
                       std::vector<std::string> label_names,
                       std::vector<std::string> feature_names = {})
      : columns_(std::move(columns)),
        labels_(std::move(labels)),
        label_names_(std::move(label_names)),
        feature_names_(std::move(feature_names)) {
    for (const auto& col : columns_) {
      if (col.size() != labels_.size())
        throw std::invalid_argument("column length does not match label count");
    }
    if (!feature_names_.empty() && feature_names_.size() != columns_.size())
      throw std::invalid_argument("feature name count does not match column count");
    for (std::int32_t y : labels_) {
      if (y < 0 || static_cast<std::size_t>(y) >= label_names_.size())
        throw std::invalid_argument("label id out of range");
    }
  }

  std::size_t n_samples() const { return labels_.size(); }
  std::size_t n_features() const { return columns_.size(); }
  std::int32_t class_count() const { return static_cast<std::int32_t>(label_names_.size()); }

  std::span<const T> column(std::size_t f) const { return columns_[f]; }
  std::span<const std::int32_t> labels() const { return labels_; }
  const std::vector<std::string>& label_names() const { return label_names_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  T value(std::size_t sample, std::size_t feature) const { return columns_[feature][sample]; }

  std::vector<T> row(std::size_t sample) const {
    std::vector<T> out(n_features());
    for (std::size_t f = 0; f < out.size(); ++f) out[f] = columns_[f][sample];
    return out;
  }

 private:
  std::vector<std::vector<T>> columns_;
  std::vector<std::int32_t> labels_;
  std::vector<std::string> label_names_;
  std::vector<std::string> feature_names_;
};

using ColumnarDataset = BasicColumnarDataset<float>;

// Active sample indices of a tree node, sorted ascending.
struct SampleIndexSet {
  std::vector<std::uint32_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  std::uint32_t operator[](std::size_t i) const { return indices[i]; }
};

struct CsvOptions {
  std::optional<std::string> label_name;   // requires a header row
  std::optional<std::size_t> label_index;  // 0-based column index
};

namespace detail {

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  if (!std::isfinite(static_cast<double>(v))) return std::nullopt;
  return v;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

inline std::int32_t intern_label(std::string_view name, std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<std::int32_t>(i);
  names.emplace_back(name);
  return static_cast<std::int32_t>(names.size() - 1);
}

}  // namespace detail

// Loads a comma-separated file. The label column defaults to the last one;
// a header row is assumed when any first-row cell outside the label column
// fails numeric parsing. Class ids follow first appearance order.
template <typename T = float>
BasicColumnarDataset<T> load_csv(const std::string& path, const CsvOptions& options = {}) {
  if (options.label_name && options.label_index)
    throw std::invalid_argument("label_name and label_index are mutually exclusive");

  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");

  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    std::string_view sv = detail::strip_cr(line);
    if (sv.empty() && lines.empty()) continue;
    lines.emplace_back(sv);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw std::runtime_error(path + ": file is empty");

  auto fail = [&](std::size_t row, std::size_t col, const std::string& msg) -> std::runtime_error {
    std::ostringstream os;
    os << path << ": row " << (row + 1) << ", column " << (col + 1) << ": " << msg;
    return std::runtime_error(os.str());
  };

  std::vector<std::string_view> first = detail::split_csv_line(lines[0]);
  const std::size_t n_cols = first.size();
  if (n_cols < 2) throw std::runtime_error(path + ": need at least one feature column and a label column");

  std::size_t label_col = n_cols - 1;
  bool has_header = false;

  if (options.label_name) {
    for (std::size_t c = 0; c < n_cols; ++c)
      if (first[c] == *options.label_name) {
        label_col = c;
        has_header = true;
        break;
      }
    if (!has_header)
      throw std::runtime_error(path + ": label column '" + *options.label_name + "' not found in header");
  } else {
    if (options.label_index) {
      if (*options.label_index >= n_cols)
        throw std::runtime_error(path + ": label column index out of range");
      label_col = *options.label_index;
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c == label_col) continue;
      if (!detail::parse_number<T>(first[c])) {
        has_header = true;
        break;
      }
    }
  }

  std::vector<std::string> feature_names;
  if (has_header) {
    for (std::size_t c = 0; c < n_cols; ++c)
      if (c != label_col) feature_names.emplace_back(first[c]);
  }

  const std::size_t first_data = has_header ? 1 : 0;
  if (first_data >= lines.size()) throw std::runtime_error(path + ": no data rows");

  const std::size_t n_features = n_cols - 1;
  const std::size_t n_rows = lines.size() - first_data;
  std::vector<std::vector<T>> columns(n_features);
  for (auto& col : columns) col.reserve(n_rows);
  std::vector<std::int32_t> labels;
  labels.reserve(n_rows);
  std::vector<std::string> label_names;

  for (std::size_t r = first_data; r < lines.size(); ++r) {
    std::vector<std::string_view> cells = detail::split_csv_line(lines[r]);
    if (cells.size() != n_cols)
      throw std::runtime_error(path + ": row " + std::to_string(r + 1) + ": expected " +
                               std::to_string(n_cols) + " cells, found " +
                               std::to_string(cells.size()));
    std::size_t f = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (c == label_col) {
        labels.push_back(detail::intern_label(cells[c], label_names));
        continue;
      }
      std::optional<T> v = detail::parse_number<T>(cells[c]);
      if (!v) throw fail(r, c, "cannot parse '" + std::string(cells[c]) + "' as a finite number");
      columns[f++].push_back(*v);
    }
  }

  if (label_names.size() < 2) throw std::runtime_error(path + ": need at least two distinct classes");
  return BasicColumnarDataset<T>(std::move(columns), std::move(labels), std::move(label_names),
                                 std::move(feature_names));
}

// Loads sparse data in the common "label idx:value ..." text format with
// 1-based feature indices; absent features are zero.
template <typename T = float>
BasicColumnarDataset<T> load_libsvm(const std::string& path, std::size_t n_features) {
  if (n_features == 0) throw std::invalid_argument("n_features must be positive");
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");

  std::vector<std::vector<T>> columns(n_features);
  std::vector<std::int32_t> labels;
  std::vector<std::string> label_names;

  auto fail = [&](std::size_t row, const std::string& msg) -> std::runtime_error {
    return std::runtime_error(path + ": line " + std::to_string(row + 1) + ": " + msg);
  };

  std::size_t row = 0;
  for (std::string raw; std::getline(in, raw); ++row) {
    std::string_view line = detail::strip_cr(raw);
    std::istringstream tokens{std::string(line)};
    std::string tok;
    if (!(tokens >> tok)) {
      --row;
      continue;  // blank line
    }
    labels.push_back(detail::intern_label(tok, label_names));
    for (auto& col : columns) col.push_back(T{0});

    while (tokens >> tok) {
      std::size_t colon = tok.find(':');
      if (colon == std::string::npos) throw fail(row, "expected index:value, found '" + tok + "'");
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc{} || p != tok.data() + colon)
        throw fail(row, "cannot parse feature index in '" + tok + "'");
      if (idx < 1 || idx > n_features)
        throw fail(row, "feature index " + std::to_string(idx) + " out of range [1, " +
                            std::to_string(n_features) + "]");
      std::optional<T> v = detail::parse_number<T>(std::string_view(tok).substr(colon + 1));
      if (!v) throw fail(row, "cannot parse feature value in '" + tok + "'");
      columns[idx - 1].back() = *v;  // duplicate indices: last one wins
    }
  }

  if (labels.empty()) throw std::runtime_error(path + ": no data rows");
  if (label_names.size() < 2) throw std::runtime_error(path + ": need at least two distinct classes");
  return BasicColumnarDataset<T>(std::move(columns), std::move(labels), std::move(label_names));
}

// Writes a dataset back to CSV with shortest round-trip number formatting,
// label column last.
template <typename T>
void write_csv(const BasicColumnarDataset<T>& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");

  for (std::size_t f = 0; f < data.n_features(); ++f) {
    if (f) out << ',';
    if (!data.feature_names().empty())
      out << data.feature_names()[f];
    else
      out << 'f' << f;
  }
  out << ",label\n";

  char buf[64];
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    for (std::size_t f = 0; f < data.n_features(); ++f) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), data.value(i, f));
      out.write(buf, ptr - buf);
      out << ',';
    }
    out << data.label_names()[data.labels()[i]] << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

// Synthetic two-class Gaussian problem: class c has mean (-1)^c * mu with
// mu_i = 1/sqrt(i+1) and identity covariance. Classes alternate by row so
// any prefix split stays balanced.
template <typename T = float>
BasicColumnarDataset<T> generate_trunk(std::size_t n_samples, std::size_t n_features,
                                       std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("n_samples must be at least 2");
  if (n_features == 0) throw std::invalid_argument("n_features must be positive");

  std::vector<double> mu(n_features);
  for (std::size_t f = 0; f < n_features; ++f) mu[f] = 1.0 / std::sqrt(static_cast<double>(f + 1));

  std::vector<std::vector<T>> columns(n_features, std::vector<T>(n_samples));
  std::vector<std::int32_t> labels(n_samples);

  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::int32_t c = static_cast<std::int32_t>(i % 2);
    labels[i] = c;
    const double sign = c == 0 ? 1.0 : -1.0;
    for (std::size_t f = 0; f < n_features; ++f)
      columns[f][i] = static_cast<T>(sign * mu[f] + normal(rng));
  }

  return BasicColumnarDataset<T>(std::move(columns), std::move(labels), {"0", "1"});
}

// Samples round(fraction * n) distinct row indices without replacement.
template <typename T>
SampleIndexSet bootstrap_sample(const BasicColumnarDataset<T>& data, double fraction,
                                std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("bootstrap fraction must be in (0, 1]");
  const std::size_t n = data.n_samples();
  std::size_t k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (k < 1) k = 1;
  if (k > n) k = n;

  SampleIndexSet out;
  out.indices.reserve(k);
  Rng rng = make_rng(seed);
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), std::uint32_t{0});
  std::sample(all.begin(), all.end(), std::back_inserter(out.indices), k, rng);
  return out;
}

}  // namespace soforest
