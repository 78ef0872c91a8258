#pragma once

// Binary model files, little-endian:
//
//   "TPCA" | version u32 | m u32 | n u32 | D u32
//   mean cube      f64 x (m*n*D), order [i][j][k]
//   U per freq     complex f64 pairs (re, im), D x D row-major,
//                  frequencies (w1, w2) row-major
//   singular vals  f64 x D per frequency, same frequency order
//
// A PCA model is stored as the m = n = 1 case with real U.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tpca/errors.hpp"
#include "tpca/pca.hpp"
#include "tpca/tpca_model.hpp"

namespace tpca {

inline constexpr std::array<char, 4> kModelMagic{'T', 'P', 'C', 'A'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

class LeWriter {
 public:
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes_.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes_.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class LeReader {
 public:
  LeReader(std::vector<char> bytes, std::string source) : bytes_(std::move(bytes)), source_(std::move(source)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    return std::bit_cast<double>(v);
  }
  void raw(char* out, std::size_t n) {
    need(n);
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(source_ + ": file is truncated");
  }

  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

struct ModelHeader {
  std::uint32_t m = 0, n = 0, dim = 0;
};

inline ModelHeader read_header(LeReader& in, const std::string& source) {
  std::array<char, 4> magic{};
  in.raw(magic.data(), magic.size());
  if (magic != kModelMagic) throw FormatError(source + ": not a model file (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kModelVersion)
    throw FormatError(source + ": unsupported model version " + std::to_string(version));
  ModelHeader h{in.u32(), in.u32(), in.u32()};
  if (h.m == 0 || h.n == 0 || h.dim == 0) throw FormatError(source + ": zero dimension in header");
  const std::size_t mn = std::size_t{h.m} * h.n;
  const std::size_t expected = 8 * (mn * h.dim + mn * h.dim * h.dim * 2 + mn * h.dim);
  if (in.remaining() != expected)
    throw FormatError(source + ": payload is " + std::to_string(in.remaining()) + " bytes, header implies " +
                      std::to_string(expected));
  return h;
}

}  // namespace detail

inline void save_model(const TpcaModel& model, const std::filesystem::path& path) {
  detail::LeWriter out;
  const TensorShape shape = model.shape();
  const std::size_t dim = model.dim();
  out.raw(kModelMagic.data(), kModelMagic.size());
  out.u32(kModelVersion);
  out.u32(static_cast<std::uint32_t>(shape.rows));
  out.u32(static_cast<std::uint32_t>(shape.cols));
  out.u32(static_cast<std::uint32_t>(dim));
  for (std::size_t i = 0; i < shape.rows; ++i)
    for (std::size_t j = 0; j < shape.cols; ++j)
      for (std::size_t k = 0; k < dim; ++k) out.f64(model.mean().at(k, i, j));
  for (const auto& u : model.projection().slices)
    for (Eigen::Index r = 0; r < u.rows(); ++r)
      for (Eigen::Index c = 0; c < u.cols(); ++c) {
        out.f64(u(r, c).real());
        out.f64(u(r, c).imag());
      }
  for (const auto& s : model.singular_values())
    for (Eigen::Index k = 0; k < s.size(); ++k) out.f64(s(k));
  detail::write_file(path, out.bytes());
}

inline TpcaModel load_tpca_model(const std::filesystem::path& path) {
  const std::string source = path.string();
  detail::LeReader in(detail::read_file(path), source);
  const auto h = detail::read_header(in, source);
  const TensorShape shape{h.m, h.n};
  const std::size_t dim = h.dim;
  const auto d = static_cast<Eigen::Index>(dim);

  CVector mean(dim, shape);
  for (std::size_t i = 0; i < shape.rows; ++i)
    for (std::size_t j = 0; j < shape.cols; ++j)
      for (std::size_t k = 0; k < dim; ++k) mean.at(k, i, j) = in.f64();
  FourierSliceStack proj(dim, dim, shape);
  for (auto& u : proj.slices)
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) {
        const double re = in.f64();
        const double im = in.f64();
        u(r, c) = cdouble(re, im);
      }
  std::vector<Eigen::VectorXd> sv(shape.size(), Eigen::VectorXd(d));
  for (auto& s : sv)
    for (Eigen::Index k = 0; k < d; ++k) s(k) = in.f64();
  return TpcaModel(std::move(mean), std::move(proj), std::move(sv));
}

inline void save_model(const PcaModel& model, const std::filesystem::path& path) {
  const std::size_t dim = model.dim();
  const TensorShape unit{1, 1};
  CVector mean(dim, unit);
  for (std::size_t k = 0; k < dim; ++k) mean.at(k, 0, 0) = model.mean(static_cast<Eigen::Index>(k));
  FourierSliceStack proj(dim, dim, unit);
  proj.slices[0] = model.basis.cast<cdouble>();
  save_model(TpcaModel(std::move(mean), std::move(proj), {model.eigenvalues}), path);
}

inline PcaModel load_pca_model(const std::filesystem::path& path) {
  const TpcaModel t = load_tpca_model(path);
  if (!(t.shape() == TensorShape{1, 1}))
    throw FormatError(path.string() + ": PCA model must have shape (1,1), got " + t.shape().str());
  const auto& u = t.projection().slices[0];
  if (u.imag().cwiseAbs().maxCoeff() != 0.0) throw FormatError(path.string() + ": PCA basis must be real");
  PcaModel m;
  m.mean.resize(static_cast<Eigen::Index>(t.dim()));
  for (std::size_t k = 0; k < t.dim(); ++k) m.mean(static_cast<Eigen::Index>(k)) = t.mean().at(k, 0, 0);
  m.basis = u.real();
  m.eigenvalues = t.singular_values()[0];
  return m;
}

}  // namespace tpca
