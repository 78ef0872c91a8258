#pragma once

// C-vectors and C-matrices: arrays whose entries are ring elements, plus
// their Fourier-domain slice representation and the slice-wise tensor SVD.
//
// A C-matrix of size M x N over shape (m, n) is stored as one contiguous
// buffer laid out [row][col][i][j]. Its DFT is kept as mn complex M x N
// matrices ("slices"), frequency (w1, w2) at index w1 * n + w2.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpca/errors.hpp"
#include "tpca/parallel.hpp"
#include "tpca/tensor_ring.hpp"

namespace tpca {

class CMatrix {
 public:
  CMatrix() = default;

  CMatrix(std::size_t rows, std::size_t cols, TensorShape shape)
      : rows_(rows), cols_(cols), shape_(shape), data_(rows * cols * shape.size(), 0.0) {
    shape_.validate();
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const TensorShape& shape() const { return shape_; }

  std::span<double> entry_span(std::size_t r, std::size_t c) {
    return {data_.data() + (r * cols_ + c) * shape_.size(), shape_.size()};
  }
  std::span<const double> entry_span(std::size_t r, std::size_t c) const {
    return {data_.data() + (r * cols_ + c) * shape_.size(), shape_.size()};
  }

  TensorScalar entry(std::size_t r, std::size_t c) const {
    auto s = entry_span(r, c);
    return TensorScalar(shape_, std::vector<double>(s.begin(), s.end()));
  }

  void set_entry(std::size_t r, std::size_t c, const TensorScalar& x) {
    require_same_shape(shape_, x.shape(), "CMatrix::set_entry");
    std::ranges::copy(x.entries(), entry_span(r, c).begin());
  }

  double& at(std::size_t r, std::size_t c, std::size_t i, std::size_t j) {
    return data_[(r * cols_ + c) * shape_.size() + i * shape_.cols + j];
  }
  double at(std::size_t r, std::size_t c, std::size_t i, std::size_t j) const {
    return data_[(r * cols_ + c) * shape_.size() + i * shape_.cols + j];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const CMatrix&, const CMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  TensorShape shape_;
  std::vector<double> data_;
};

/// A column of D ring elements; equivalently an m x n x D cube.
class CVector {
 public:
  CVector() = default;

  CVector(std::size_t len, TensorShape shape) : len_(len), shape_(shape), data_(len * shape.size(), 0.0) {
    shape_.validate();
  }

  std::size_t size() const { return len_; }
  const TensorShape& shape() const { return shape_; }

  std::span<double> entry_span(std::size_t k) { return {data_.data() + k * shape_.size(), shape_.size()}; }
  std::span<const double> entry_span(std::size_t k) const {
    return {data_.data() + k * shape_.size(), shape_.size()};
  }

  TensorScalar entry(std::size_t k) const {
    auto s = entry_span(k);
    return TensorScalar(shape_, std::vector<double>(s.begin(), s.end()));
  }

  void set_entry(std::size_t k, const TensorScalar& x) {
    require_same_shape(shape_, x.shape(), "CVector::set_entry");
    std::ranges::copy(x.entries(), entry_span(k).begin());
  }

  double& at(std::size_t k, std::size_t i, std::size_t j) { return data_[k * shape_.size() + i * shape_.cols + j]; }
  double at(std::size_t k, std::size_t i, std::size_t j) const {
    return data_[k * shape_.size() + i * shape_.cols + j];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// The same storage viewed as a D x 1 C-matrix.
  CMatrix as_column() const {
    CMatrix out(len_, 1, shape_);
    std::ranges::copy(data_, out.data().begin());
    return out;
  }

  static CVector from_column(const CMatrix& x) {
    if (x.cols() != 1) throw ShapeError("CVector::from_column: expected a single column");
    CVector out(x.rows(), x.shape());
    std::ranges::copy(x.data(), out.data().begin());
    return out;
  }

  friend bool operator==(const CVector&, const CVector&) = default;

 private:
  std::size_t len_ = 0;
  TensorShape shape_;
  std::vector<double> data_;
};

/// Per-frequency complex matrices of a transformed C-matrix.
struct FourierSliceStack {
  std::size_t rows = 0;
  std::size_t cols = 0;
  TensorShape shape;
  std::vector<Eigen::MatrixXcd> slices;

  FourierSliceStack() = default;
  FourierSliceStack(std::size_t r, std::size_t c, TensorShape s)
      : rows(r), cols(c), shape(s), slices(s.size(), Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(r),
                                                                           static_cast<Eigen::Index>(c))) {}

  Eigen::MatrixXcd& slice(std::size_t w1, std::size_t w2) { return slices[w1 * shape.cols + w2]; }
  const Eigen::MatrixXcd& slice(std::size_t w1, std::size_t w2) const { return slices[w1 * shape.cols + w2]; }
};

/// Spatial slice: fixes position (i, j) inside every entry.
inline Eigen::MatrixXd spatial_slice(const CMatrix& x, std::size_t i, std::size_t j) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols()));
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x.at(r, c, i, j);
  return out;
}

inline CMatrix cmat_identity(std::size_t dim, TensorShape shape) {
  if (dim == 0) throw ShapeError("cmat_identity: dimension must be >= 1");
  CMatrix out(dim, dim, shape);
  for (std::size_t k = 0; k < dim; ++k) out.at(k, k, 0, 0) = 1.0;
  return out;
}

inline CMatrix hermitian(const CMatrix& x) {
  CMatrix out(x.cols(), x.rows(), x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out.set_entry(c, r, conjugate(x.entry(r, c)));
  return out;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("max_abs_diff: dimension mismatch");
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
  return worst;
}

inline void require_conformable(const CMatrix& x, const CMatrix& y, const char* op) {
  require_same_shape(x.shape(), y.shape(), op);
  if (x.cols() != y.rows())
    throw ShapeError(std::string(op) + ": inner dimensions differ (" + std::to_string(x.cols()) + " vs " +
                     std::to_string(y.rows()) + ")");
}

/// [C]_{ij} = sum_k [X]_{ik} o [Y]_{kj}, each product by the direct
/// circular-convolution sum.
inline CMatrix multiply_direct(const CMatrix& x, const CMatrix& y) {
  require_conformable(x, y, "multiply_direct");
  const TensorShape shape = x.shape();
  CMatrix out(x.rows(), y.cols(), shape);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) {
      TensorScalar acc(shape);
      for (std::size_t k = 0; k < x.cols(); ++k) acc = add(acc, multiply(x.entry(r, k), y.entry(k, c)));
      out.set_entry(r, c, acc);
    }
  return out;
}

inline FourierSliceStack dft(const CMatrix& x) {
  const TensorShape shape = x.shape();
  const Dft2Plan plan(shape);
  FourierSliceStack out(x.rows(), x.cols(), shape);
  std::vector<cdouble> spec(shape.size());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) {
      plan.forward(x.entry_span(r, c), spec);
      for (std::size_t f = 0; f < shape.size(); ++f)
        out.slices[f](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = spec[f];
    }
  return out;
}

inline FourierSliceStack dft(const CVector& x) { return dft(x.as_column()); }

/// Inverse transform to a real C-matrix; the stack must be conjugate
/// symmetric (see real_part_checked for the residue policy).
inline CMatrix idft(const FourierSliceStack& s) {
  const TensorShape shape = s.shape;
  const Dft2Plan plan(shape);
  if (s.slices.size() != shape.size()) throw ShapeError("idft: slice count does not match shape");
  std::vector<cdouble> all(s.rows * s.cols * shape.size());
  std::vector<cdouble> spec(shape.size());
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t c = 0; c < s.cols; ++c) {
      for (std::size_t f = 0; f < shape.size(); ++f)
        spec[f] = s.slices[f](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      plan.inverse(spec, std::span<cdouble>(all).subspan((r * s.cols + c) * shape.size(), shape.size()));
    }
  const std::vector<double> real = real_part_checked(all, "cmat idft");
  CMatrix out(s.rows, s.cols, shape);
  std::ranges::copy(real, out.data().begin());
  return out;
}

/// Slice-wise product of two stacks: out(w) = a(w) * b(w).
inline FourierSliceStack multiply_slices(const FourierSliceStack& a, const FourierSliceStack& b) {
  require_same_shape(a.shape, b.shape, "multiply_slices");
  if (a.cols != b.rows) throw ShapeError("multiply_slices: inner dimensions differ");
  FourierSliceStack out(a.rows, b.cols, a.shape);
  for (std::size_t f = 0; f < a.slices.size(); ++f) out.slices[f].noalias() = a.slices[f] * b.slices[f];
  return out;
}

/// Fast path: transform, multiply mn complex matrices, transform back.
inline CMatrix multiply_fourier(const CMatrix& x, const CMatrix& y) {
  require_conformable(x, y, "multiply_fourier");
  return idft(multiply_slices(dft(x), dft(y)));
}

inline CMatrix multiply(const CMatrix& x, const CMatrix& y) { return multiply_fourier(x, y); }

/// True iff both X^H o X and X o X^H are within `tol` (max-abs) of I.
inline bool is_unitary(const CMatrix& x, double tol) {
  if (x.rows() != x.cols()) return false;
  const CMatrix id = cmat_identity(x.rows(), x.shape());
  const CMatrix xh = hermitian(x);
  return max_abs_diff(multiply(xh, x), id) < tol && max_abs_diff(multiply(x, xh), id) < tol;
}

/// Slice-level unitarity check: every slice satisfies A^H A = A A^H = I.
inline bool is_unitary(const FourierSliceStack& s, double tol) {
  if (s.rows != s.cols) return false;
  const auto id = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
  for (const auto& a : s.slices) {
    if ((a.adjoint() * a - id).cwiseAbs().maxCoeff() >= tol) return false;
    if ((a * a.adjoint() - id).cwiseAbs().maxCoeff() >= tol) return false;
  }
  return true;
}

/// Largest |slice(w) - conj(slice(mirror(w)))| over the stack.
inline double conjugate_symmetry_error(const FourierSliceStack& s) {
  double worst = 0.0;
  for (std::size_t w1 = 0; w1 < s.shape.rows; ++w1)
    for (std::size_t w2 = 0; w2 < s.shape.cols; ++w2) {
      auto [m1, m2] = mirror_frequency(s.shape, w1, w2);
      worst = std::max(worst, (s.slice(w1, w2) - s.slice(m1, m2).conjugate()).cwiseAbs().maxCoeff());
    }
  return worst;
}

// ---------------------------------------------------------------------------
// Tensor SVD

struct SliceSvd {
  Eigen::MatrixXcd u;
  Eigen::VectorXd s;
  Eigen::MatrixXcd v;
};

namespace detail {

// First component whose magnitude is within a relative 1e-9 of the
// column maximum. The slack keeps the pivot stable when two components
// tie up to rounding.
template <typename Vec>
Eigen::Index pivot_component(const Vec& col) {
  const double top = col.cwiseAbs().maxCoeff();
  for (Eigen::Index k = 0; k < col.size(); ++k)
    if (std::abs(col(k)) >= top * (1.0 - 1e-9)) return k;
  return 0;
}

// Descending singular values, ties kept in original column order.
inline std::vector<Eigen::Index> descending_order(const Eigen::VectorXd& s) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::ranges::stable_sort(order, [&](Eigen::Index a, Eigen::Index b) { return s(a) > s(b); });
  return order;
}

}  // namespace detail

/// SVD of one real slice. Each left vector is sign-flipped so its
/// largest-magnitude component is positive; the right vector follows.
inline SliceSvd real_slice_svd(const Eigen::MatrixXd& a) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  const auto order = detail::descending_order(svd.singularValues());
  const Eigen::Index d = a.rows();
  SliceSvd out{Eigen::MatrixXcd(d, d), Eigen::VectorXd(d), Eigen::MatrixXcd(d, d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    Eigen::VectorXd u = svd.matrixU().col(src);
    Eigen::VectorXd v = svd.matrixV().col(src);
    if (u(detail::pivot_component(u)) < 0.0) {
      u = -u;
      v = -v;
    }
    out.u.col(k) = u.cast<cdouble>();
    out.v.col(k) = v.cast<cdouble>();
    out.s(k) = svd.singularValues()(src);
  }
  return out;
}

/// SVD of one complex slice. Each left vector is rotated so its
/// largest-magnitude component is real and positive; the right vector gets
/// the same unit factor, leaving u s v^H unchanged.
inline SliceSvd complex_slice_svd(const Eigen::MatrixXcd& a) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
  const auto order = detail::descending_order(svd.singularValues());
  const Eigen::Index d = a.rows();
  SliceSvd out{Eigen::MatrixXcd(d, d), Eigen::VectorXd(d), Eigen::MatrixXcd(d, d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    Eigen::VectorXcd u = svd.matrixU().col(src);
    Eigen::VectorXcd v = svd.matrixV().col(src);
    const cdouble p = u(detail::pivot_component(u));
    const cdouble phase = std::conj(p) / std::abs(p);
    out.u.col(k) = u * phase;
    out.v.col(k) = v * phase;
    out.s(k) = svd.singularValues()(src);
  }
  return out;
}

/// Fourier-domain factors of G = U o S o V^H.
struct TsvdFactors {
  FourierSliceStack u;
  FourierSliceStack s;
  FourierSliceStack v;

  /// Singular values of the slice at frequency (w1, w2), descending.
  Eigen::VectorXd singular_values(std::size_t w1, std::size_t w2) const {
    return s.slice(w1, w2).diagonal().real();
  }

  CMatrix u_spatial() const { return idft(u); }
  CMatrix s_spatial() const { return idft(s); }
  CMatrix v_spatial() const { return idft(v); }
};

/// True when (w1, w2) is the lexicographically smaller member of its
/// mirrored pair (or is its own mirror).
inline bool is_canonical_frequency(TensorShape shape, std::size_t w1, std::size_t w2) {
  auto [m1, m2] = mirror_frequency(shape, w1, w2);
  return std::pair{w1, w2} <= std::pair{m1, m2};
}

/// Slice-wise SVD of a conjugate-symmetric stack of square matrices.
/// Only canonical frequencies are decomposed; each mirrored slice is set to
/// the entrywise conjugate of its partner, so every factor stack is
/// exactly conjugate symmetric. Self-mirrored slices are real and go
/// through a real SVD.
inline TsvdFactors tsvd_slices(const FourierSliceStack& g) {
  if (g.rows != g.cols) throw ShapeError("tsvd: matrix must be square");
  const TensorShape shape = g.shape;
  const std::size_t d = g.rows;
  TsvdFactors out{FourierSliceStack(d, d, shape), FourierSliceStack(d, d, shape), FourierSliceStack(d, d, shape)};

  std::vector<std::size_t> canonical;
  for (std::size_t w1 = 0; w1 < shape.rows; ++w1)
    for (std::size_t w2 = 0; w2 < shape.cols; ++w2)
      if (is_canonical_frequency(shape, w1, w2)) canonical.push_back(w1 * shape.cols + w2);

  parallel_for(canonical.size(), [&](std::size_t idx) {
    const std::size_t f = canonical[idx];
    const std::size_t w1 = f / shape.cols, w2 = f % shape.cols;
    auto [m1, m2] = mirror_frequency(shape, w1, w2);
    const bool self_mirrored = (m1 == w1 && m2 == w2);
    SliceSvd r;
    try {
      r = self_mirrored ? real_slice_svd(g.slices[f].real()) : complex_slice_svd(g.slices[f]);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at frequency (" + std::to_string(w1) + "," +
                           std::to_string(w2) + ")");
    }
    const std::size_t mf = m1 * shape.cols + m2;
    out.u.slices[f] = r.u;
    out.v.slices[f] = r.v;
    out.s.slices[f] = r.s.cast<cdouble>().asDiagonal();
    if (!self_mirrored) {
      out.u.slices[mf] = r.u.conjugate();
      out.v.slices[mf] = r.v.conjugate();
      out.s.slices[mf] = out.s.slices[f];
    }
  });
  return out;
}

/// Tensor SVD of a real square C-matrix via its Fourier slices.
inline TsvdFactors tsvd(const CMatrix& g) {
  if (g.rows() != g.cols()) throw ShapeError("tsvd: matrix must be square");
  return tsvd_slices(dft(g));
}

}  // namespace tpca
