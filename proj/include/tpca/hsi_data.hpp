#pragma once

// Hyperspectral cubes and label maps: raw little-endian payloads described
// by a JSON sidecar, global min-max normalization, 3x3 neighborhood
// tensorization and the seeded train/test split.
//
// Sidecar for `scene.cube` / `scene.labels` is `scene.json`:
//   {"height": M, "width": N, "bands": D, "dtype": "f32le", "order": "hwc",
//    "label_height": M, "label_width": N}

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tpca/errors.hpp"
#include "tpca/model_io.hpp"
#include "tpca/tensor_linalg.hpp"

namespace tpca {

namespace fs = std::filesystem;

struct HsiCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  std::vector<double> data;  // [row][col][band]

  HsiCube() = default;
  HsiCube(std::size_t h, std::size_t w, std::size_t d) : height(h), width(w), bands(d), data(h * w * d, 0.0) {}

  double& at(std::size_t r, std::size_t c, std::size_t b) { return data[(r * width + c) * bands + b]; }
  double at(std::size_t r, std::size_t c, std::size_t b) const { return data[(r * width + c) * bands + b]; }

  std::span<const double> spectrum(std::size_t r, std::size_t c) const {
    return {data.data() + (r * width + c) * bands, bands};
  }
};

struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint16_t> labels;  // [row][col], 0 = unlabeled

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w) : height(h), width(w), labels(h * w, 0) {}

  std::uint16_t& at(std::size_t r, std::size_t c) { return labels[r * width + c]; }
  std::uint16_t at(std::size_t r, std::size_t c) const { return labels[r * width + c]; }

  /// Sorted set of nonzero class ids present.
  std::vector<std::uint16_t> classes() const {
    std::set<std::uint16_t> s;
    for (auto l : labels)
      if (l != 0) s.insert(l);
    return {s.begin(), s.end()};
  }
};

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

struct CubeHeader {
  std::size_t height = 0, width = 0, bands = 0;
};

inline fs::path sidecar_path(const fs::path& data_path) {
  fs::path p = data_path;
  p.replace_extension(".json");
  return p;
}

namespace detail {

inline nlohmann::json read_sidecar(const fs::path& data_path) {
  const fs::path side = sidecar_path(data_path);
  std::ifstream in(side);
  if (!in) throw FormatError("missing sidecar " + side.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side.string() + ": " + e.what());
  }
}

inline std::size_t positive_field(const nlohmann::json& j, const char* key, const fs::path& side) {
  if (!j.contains(key) || !j[key].is_number_unsigned() || j[key].get<std::size_t>() == 0)
    throw FormatError(side.string() + ": field \"" + key + "\" must be a positive integer");
  return j[key].get<std::size_t>();
}

inline void merge_sidecar(const fs::path& data_path, const nlohmann::json& fields) {
  const fs::path side = sidecar_path(data_path);
  nlohmann::json j = nlohmann::json::object();
  if (fs::exists(side)) j = read_sidecar(data_path);
  j.update(fields);
  std::ofstream out(side, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + side.string());
  out << j.dump(2) << '\n';
}

inline std::vector<char> read_payload(const fs::path& path, std::size_t expected) {
  if (!fs::exists(path)) throw FormatError("missing file " + path.string());
  std::vector<char> bytes = read_file(path);
  if (bytes.size() < expected)
    throw FormatError(path.string() + ": truncated payload, " + std::to_string(bytes.size()) + " of " +
                      std::to_string(expected) + " bytes");
  if (bytes.size() > expected)
    throw FormatError(path.string() + ": payload has " + std::to_string(bytes.size() - expected) +
                      " trailing bytes");
  return bytes;
}

}  // namespace detail

/// Reads only the sidecar, so callers can validate parameters against the
/// cube dimensions before touching the payload.
inline CubeHeader read_cube_header(const fs::path& cube_path) {
  const auto j = detail::read_sidecar(cube_path);
  const fs::path side = sidecar_path(cube_path);
  CubeHeader h{detail::positive_field(j, "height", side), detail::positive_field(j, "width", side),
               detail::positive_field(j, "bands", side)};
  if (j.value("dtype", "") != "f32le") throw FormatError(side.string() + ": dtype must be \"f32le\"");
  if (j.value("order", "") != "hwc") throw FormatError(side.string() + ": order must be \"hwc\"");
  return h;
}

inline HsiCube load_cube(const fs::path& path) {
  const CubeHeader h = read_cube_header(path);
  const std::size_t count = h.height * h.width * h.bands;
  const std::vector<char> bytes = detail::read_payload(path, count * 4);
  HsiCube cube(h.height, h.width, h.bands);
  for (std::size_t k = 0; k < count; ++k) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * k + b])) << (8 * b);
    const float v = std::bit_cast<float>(bits);
    if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite value at element " + std::to_string(k));
    cube.data[k] = v;
  }
  return cube;
}

inline LabelMap load_labels(const fs::path& path) {
  const auto j = detail::read_sidecar(path);
  const fs::path side = sidecar_path(path);
  LabelMap map(detail::positive_field(j, "label_height", side), detail::positive_field(j, "label_width", side));
  const std::vector<char> bytes = detail::read_payload(path, map.labels.size() * 2);
  for (std::size_t k = 0; k < map.labels.size(); ++k)
    map.labels[k] = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[2 * k]) |
                                               (static_cast<unsigned char>(bytes[2 * k + 1]) << 8));
  return map;
}

/// Writes the float32 payload and merges the cube fields into the sidecar.
inline void save_cube(const HsiCube& cube, const fs::path& path) {
  std::vector<char> bytes;
  bytes.reserve(cube.data.size() * 4);
  for (double v : cube.data) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
  detail::write_file(path, bytes);
  detail::merge_sidecar(path, {{"height", cube.height},
                               {"width", cube.width},
                               {"bands", cube.bands},
                               {"dtype", "f32le"},
                               {"order", "hwc"}});
}

inline void save_labels(const LabelMap& map, const fs::path& path) {
  std::vector<char> bytes;
  bytes.reserve(map.labels.size() * 2);
  for (auto l : map.labels) {
    bytes.push_back(static_cast<char>(l & 0xFFu));
    bytes.push_back(static_cast<char>(l >> 8));
  }
  detail::write_file(path, bytes);
  detail::merge_sidecar(path, {{"label_height", map.height}, {"label_width", map.width}});
}

inline void require_paired(const HsiCube& cube, const LabelMap& labels) {
  if (cube.height != labels.height || cube.width != labels.width)
    throw FormatError("label map is " + std::to_string(labels.height) + "x" + std::to_string(labels.width) +
                      " but cube is " + std::to_string(cube.height) + "x" + std::to_string(cube.width));
}

/// Global affine rescale of every value to [0, 1].
inline HsiCube normalize(const HsiCube& cube) {
  if (cube.data.empty()) throw ConfigError("normalize: empty cube");
  const auto [lo, hi] = std::ranges::minmax_element(cube.data);
  const double min = *lo, max = *hi;
  if (!(max > min)) throw NumericalError("normalize: cube has a degenerate value range");
  HsiCube out = cube;
  const double inv = 1.0 / (max - min);
  for (double& v : out.data) v = (v - min) * inv;
  return out;
}

// ---------------------------------------------------------------------------
// Tensorization

inline constexpr TensorShape kNeighborhoodShape{3, 3};

/// Mirror reflection without edge repetition: -1 -> 1, n -> n-2.
/// A length-1 axis reflects onto itself.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  if (n == 1) return 0;
  while (i < 0 || i >= sn) i = (i < 0) ? -i : 2 * (sn - 1) - i;
  return static_cast<std::size_t>(i);
}

/// Ring position -> spatial offset for a 3x3 window: 0 -> 0, 1 -> +1,
/// 2 -> -1. The center lands on the identity's support, and offsets agree
/// with circular indexing mod 3.
inline std::ptrdiff_t ring_offset(std::size_t a) { return a <= 1 ? static_cast<std::ptrdiff_t>(a) : -1; }

/// C-vector of the 3x3 neighborhood of (row, col) across all bands.
inline CVector tensorize(const HsiCube& cube, std::size_t row, std::size_t col) {
  if (row >= cube.height || col >= cube.width)
    throw ShapeError("tensorize: pixel (" + std::to_string(row) + "," + std::to_string(col) + ") outside image");
  CVector out(cube.bands, kNeighborhoodShape);
  for (std::size_t a = 0; a < 3; ++a) {
    const std::size_t r = reflect_index(static_cast<std::ptrdiff_t>(row) + ring_offset(a), cube.height);
    for (std::size_t b = 0; b < 3; ++b) {
      const std::size_t c = reflect_index(static_cast<std::ptrdiff_t>(col) + ring_offset(b), cube.width);
      auto spec = cube.spectrum(r, c);
      for (std::size_t k = 0; k < cube.bands; ++k) out.at(k, a, b) = spec[k];
    }
  }
  return out;
}

inline Eigen::VectorXd spectrum_vector(const HsiCube& cube, std::size_t row, std::size_t col) {
  auto s = cube.spectrum(row, col);
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

// ---------------------------------------------------------------------------
// Train/test split

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.10;
};

struct Split {
  std::vector<Pixel> train;  // row-major order
  std::vector<Pixel> test;   // row-major order
};

/// Unbiased draw from [0, bound) on raw mt19937_64 output, by rejection.
/// Written out rather than using std::uniform_int_distribution, whose
/// algorithm is implementation-defined.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

/// Number of training pixels: ceil(fraction * count), with a 1e-9 slack so
/// that products like 0.1 * 100 do not round up to 11.
inline std::size_t train_count(double fraction, std::size_t count) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(count) - 1e-9));
}

/// Uniform draw without replacement over labeled pixels. The labeled pixels
/// are listed row-major, seeded mt19937_64 drives a partial Fisher-Yates
/// shuffle, and the first ceil(fraction * count) become training pixels.
inline Split split(const LabelMap& labels, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0, 1)");
  std::vector<Pixel> pool;
  for (std::size_t r = 0; r < labels.height; ++r)
    for (std::size_t c = 0; c < labels.width; ++c)
      if (labels.at(r, c) != 0) pool.push_back({r, c});
  if (pool.empty()) throw ConfigError("split: label map has no labeled pixels");
  if (pool.size() < 2) throw ConfigError("split: need at least 2 labeled pixels");

  const std::size_t k = std::max<std::size_t>(1, train_count(spec.train_fraction, pool.size()));
  if (k >= pool.size()) throw ConfigError("split: train_fraction leaves no test pixels");

  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + bounded_draw(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  Split out;
  out.train.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  out.test.assign(pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
  std::ranges::sort(out.train);
  std::ranges::sort(out.test);
  return out;
}

}  // namespace tpca
