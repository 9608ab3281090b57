#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "soforest/forest.hpp"

namespace soforest {

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

inline constexpr char kModelMagic[8] = {'s', 'o', 'f', 'o', 'r', 'e', 's', 't'};
inline constexpr std::uint32_t kModelVersion = 1;

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  template <typename T>
  void value(T v) {
    raw(&v, sizeof(T));
  }

  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}

  void raw(void* p, std::size_t n) {
    if (pos_ + n > size_) throw std::runtime_error("model file truncated");
    std::memcpy(p, data_ + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  std::int32_t i32() { return take<std::int32_t>(); }
  double f64() { return take<double>(); }
  std::string str() {
    const std::uint32_t n = u32();
    if (pos_ + n > size_) throw std::runtime_error("model file truncated");
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }
  template <typename T>
  T value() {
    return take<T>();
  }
  bool done() const { return pos_ == size_; }

 private:
  template <typename T>
  T take() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }

  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline std::uint32_t payload_crc(const char* data, std::size_t size) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0ul, nullptr, 0), reinterpret_cast<const Bytef*>(data),
              static_cast<uInt>(size)));
}

inline void write_calibration(ByteWriter& w, const CrossoverCalibration& cal) {
  w.u64(cal.breakeven);
  w.f64(cal.elapsed_seconds);
  w.u8(cal.fallback ? 1 : 0);
  w.u64(cal.samples.size());
  for (const auto& s : cal.samples) {
    w.u64(s.n);
    w.f64(s.exact_seconds);
    w.f64(s.histogram_seconds);
  }
}

inline CrossoverCalibration read_calibration(ByteReader& r) {
  CrossoverCalibration cal;
  cal.breakeven = r.u64();
  cal.elapsed_seconds = r.f64();
  cal.fallback = r.u8() != 0;
  cal.samples.resize(r.u64());
  for (auto& s : cal.samples) {
    s.n = r.u64();
    s.exact_seconds = r.f64();
    s.histogram_seconds = r.f64();
  }
  return cal;
}

}  // namespace detail

template <typename T>
void save_model(const BasicForest<T>& forest, const std::string& path) {
  detail::ByteWriter w;
  w.u8(static_cast<std::uint8_t>(sizeof(T)));
  w.u32(forest.n_features);
  w.i32(forest.class_count);
  w.u32(static_cast<std::uint32_t>(forest.label_names.size()));
  for (const auto& name : forest.label_names) w.str(name);

  const TrainConfig& c = forest.config;
  w.u64(c.n_trees);
  w.u8(static_cast<std::uint8_t>(c.mode));
  w.u64(c.bin_count);
  w.u8(c.two_level_binning ? 1 : 0);
  w.u8(c.breakeven ? 1 : 0);
  w.u64(c.breakeven ? *c.breakeven : 0);
  w.f64(c.bootstrap_fraction);
  w.u8(c.max_depth ? 1 : 0);
  w.u64(c.max_depth ? *c.max_depth : 0);
  w.u64(c.min_samples_split);
  w.u64(c.max_split_retries);
  w.u64(c.n_workers);
  w.u64(c.seed);
  w.u64(c.calibration.n_min);
  w.u64(c.calibration.n_max);
  w.f64(c.calibration.budget_seconds);
  w.u64(c.calibration.bin_count);
  w.u8(c.calibration.two_level ? 1 : 0);
  w.u64(c.calibration.repetitions);
  w.u64(c.calibration.seed);

  w.u64(forest.breakeven);
  w.u8(forest.calibration ? 1 : 0);
  if (forest.calibration) detail::write_calibration(w, *forest.calibration);

  w.u64(forest.trees.size());
  for (const auto& tree : forest.trees) {
    w.u64(tree.nodes.size());
    for (const auto& node : tree.nodes) {
      w.u32(static_cast<std::uint32_t>(node.projection.size()));
      for (const auto& term : node.projection) {
        w.u32(term.feature);
        w.value(term.weight);
      }
      w.value(node.threshold);
      w.i32(node.left);
      w.i32(node.right);
      w.i32(node.predicted_class);
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out.write(detail::kModelMagic, sizeof(detail::kModelMagic));
  const std::uint32_t version = detail::kModelVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  const std::uint32_t crc = detail::payload_crc(w.bytes().data(), w.bytes().size());
  out.write(reinterpret_cast<const char*>(&crc), 4);
  if (!out) throw std::runtime_error(path + ": write failed");
}

template <typename T = float>
BasicForest<T> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  constexpr std::size_t header = sizeof(detail::kModelMagic) + 4;
  if (bytes.size() < header + 4 ||
      std::memcmp(bytes.data(), detail::kModelMagic, sizeof(detail::kModelMagic)) != 0)
    throw std::runtime_error(path + ": not a forest model file");

  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + sizeof(detail::kModelMagic), 4);
  if (version != detail::kModelVersion)
    throw std::runtime_error(path + ": unsupported model format version " +
                             std::to_string(version));

  const char* payload = bytes.data() + header;
  const std::size_t payload_size = bytes.size() - header - 4;
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  if (detail::payload_crc(payload, payload_size) != stored_crc)
    throw std::runtime_error(path + ": model file corrupted (checksum mismatch)");

  detail::ByteReader r(payload, payload_size);
  const std::uint8_t value_size = r.u8();
  if (value_size != sizeof(T))
    throw std::runtime_error(path + ": model stores " + std::to_string(value_size) +
                             "-byte values, expected " + std::to_string(sizeof(T)));

  BasicForest<T> forest;
  forest.n_features = r.u32();
  forest.class_count = r.i32();
  if (forest.class_count < 2) throw std::runtime_error(path + ": invalid class count");
  forest.label_names.resize(r.u32());
  for (auto& name : forest.label_names) name = r.str();
  if (forest.label_names.size() != static_cast<std::size_t>(forest.class_count))
    throw std::runtime_error(path + ": label name count mismatch");

  TrainConfig& c = forest.config;
  c.n_trees = r.u64();
  const std::uint8_t mode = r.u8();
  if (mode > 2) throw std::runtime_error(path + ": invalid split mode");
  c.mode = static_cast<SplitMode>(mode);
  c.bin_count = r.u64();
  c.two_level_binning = r.u8() != 0;
  const bool has_breakeven = r.u8() != 0;
  const std::uint64_t breakeven = r.u64();
  if (has_breakeven) c.breakeven = breakeven;
  c.bootstrap_fraction = r.f64();
  const bool has_max_depth = r.u8() != 0;
  const std::uint64_t max_depth = r.u64();
  if (has_max_depth) c.max_depth = max_depth;
  c.min_samples_split = r.u64();
  c.max_split_retries = r.u64();
  c.n_workers = r.u64();
  c.seed = r.u64();
  c.calibration.n_min = r.u64();
  c.calibration.n_max = r.u64();
  c.calibration.budget_seconds = r.f64();
  c.calibration.bin_count = r.u64();
  c.calibration.two_level = r.u8() != 0;
  c.calibration.repetitions = r.u64();
  c.calibration.seed = r.u64();

  forest.breakeven = r.u64();
  if (r.u8() != 0) forest.calibration = detail::read_calibration(r);

  forest.trees.resize(r.u64());
  for (auto& tree : forest.trees) {
    const std::uint64_t n_nodes = r.u64();
    if (n_nodes == 0) throw std::runtime_error(path + ": empty tree");
    tree.nodes.resize(n_nodes);
    for (auto& node : tree.nodes) {
      node.projection.resize(r.u32());
      for (auto& term : node.projection) {
        term.feature = r.u32();
        if (term.feature >= forest.n_features)
          throw std::runtime_error(path + ": projection feature out of range");
        term.weight = r.template value<T>();
      }
      node.threshold = r.template value<T>();
      node.left = r.i32();
      node.right = r.i32();
      node.predicted_class = r.i32();
      const auto limit = static_cast<std::int64_t>(n_nodes);
      if (node.is_leaf()) {
        if (node.predicted_class < 0 || node.predicted_class >= forest.class_count)
          throw std::runtime_error(path + ": leaf class out of range");
      } else if (node.left <= 0 || node.right <= 0 || node.left >= limit ||
                 node.right >= limit || node.projection.empty()) {
        throw std::runtime_error(path + ": malformed internal node");
      }
    }
  }
  if (!r.done()) throw std::runtime_error(path + ": trailing bytes after model payload");
  return forest;
}

}  // namespace soforest
