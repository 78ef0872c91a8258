#pragma once

// The ring C of fixed-size m x n tensors: entrywise addition, two-way
// circular convolution as multiplication, scalar multiplication, the
// conjugate, and the 2D DFT that diagonalizes the product.
//
// Indices are 0-based throughout. Position (0,0) is the ring's "first"
// entry: the identity tensor is the impulse at (0,0), and every index map
// is taken modulo the tensor size.

#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "tpca/errors.hpp"

namespace tpca {

using cdouble = std::complex<double>;

struct TensorShape {
  std::size_t rows = 1;
  std::size_t cols = 1;

  constexpr std::size_t size() const { return rows * cols; }
  friend constexpr bool operator==(const TensorShape&, const TensorShape&) = default;

  std::string str() const {
    return "(" + std::to_string(rows) + "," + std::to_string(cols) + ")";
  }

  void validate() const {
    if (rows == 0 || cols == 0) throw ShapeError("tensor shape must be positive, got " + str());
  }
};

namespace detail {

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
bool is_finite(const T& v) {
  if constexpr (is_complex<T>::value)
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  else
    return std::isfinite(v);
}

template <typename T>
T conj_value(const T& v) {
  if constexpr (is_complex<T>::value)
    return std::conj(v);
  else
    return v;
}

inline std::size_t mod(std::ptrdiff_t a, std::size_t n) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((a % sn) + sn) % sn);
}

}  // namespace detail

/// One ring element: an m x n grid of field values, row-major.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : Tensor(TensorShape{}) {}

  explicit Tensor(TensorShape shape) : shape_(shape) {
    shape_.validate();
    data_.assign(shape_.size(), T{});
  }

  Tensor(TensorShape shape, std::vector<T> entries) : shape_(shape), data_(std::move(entries)) {
    shape_.validate();
    if (data_.size() != shape_.size())
      throw ShapeError("tensor of shape " + shape_.str() + " needs " + std::to_string(shape_.size()) +
                       " entries, got " + std::to_string(data_.size()));
    for (const auto& v : data_)
      if (!detail::is_finite(v)) throw NumericalError("tensor entries must be finite");
  }

  /// Row-by-row literal, e.g. Tensor<double>::from_rows({{1, 2}, {3, 4}}).
  static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    TensorShape shape{rows.size(), rows.size() ? rows.begin()->size() : 0};
    std::vector<T> entries;
    entries.reserve(shape.size());
    for (const auto& r : rows) {
      if (r.size() != shape.cols) throw ShapeError("ragged tensor literal");
      entries.insert(entries.end(), r.begin(), r.end());
    }
    return Tensor(shape, std::move(entries));
  }

  const TensorShape& shape() const { return shape_; }
  std::size_t rows() const { return shape_.rows; }
  std::size_t cols() const { return shape_.cols; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * shape_.cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * shape_.cols + j]; }

  std::span<T> entries() { return data_; }
  std::span<const T> entries() const { return data_; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  TensorShape shape_;
  std::vector<T> data_;
};

using TensorScalar = Tensor<double>;
using FourierScalar = Tensor<cdouble>;

inline void require_same_shape(const TensorShape& a, const TensorShape& b, const char* op) {
  if (!(a == b)) throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

template <typename T>
Tensor<T> zero_tensor(TensorShape shape) {
  return Tensor<T>(shape);
}

template <typename T = double>
Tensor<T> identity_tensor(TensorShape shape) {
  Tensor<T> e(shape);
  e(0, 0) = T{1};
  return e;
}

template <typename T>
Tensor<T> add(const Tensor<T>& x, const Tensor<T>& y) {
  require_same_shape(x.shape(), y.shape(), "add");
  Tensor<T> out(x.shape());
  auto o = out.entries();
  auto a = x.entries();
  auto b = y.entries();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = a[k] + b[k];
  return out;
}

template <typename T>
Tensor<T> subtract(const Tensor<T>& x, const Tensor<T>& y) {
  require_same_shape(x.shape(), y.shape(), "subtract");
  Tensor<T> out(x.shape());
  auto o = out.entries();
  auto a = x.entries();
  auto b = y.entries();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = a[k] - b[k];
  return out;
}

template <typename T>
Tensor<T> scale(T alpha, const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto o = out.entries();
  auto a = x.entries();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = alpha * a[k];
  return out;
}

/// Two-way circular convolution, evaluated as the direct double sum.
/// Costs (mn)^2 multiplies; this is the reference path.
template <typename T>
Tensor<T> multiply(const Tensor<T>& x, const Tensor<T>& y) {
  require_same_shape(x.shape(), y.shape(), "multiply");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T acc{};
      for (std::size_t k1 = 0; k1 < m; ++k1) {
        const std::size_t r = detail::mod(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(k1), m);
        for (std::size_t k2 = 0; k2 < n; ++k2) {
          const std::size_t c = detail::mod(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(k2), n);
          acc += x(k1, k2) * y(r, c);
        }
      }
      out(i, j) = acc;
    }
  return out;
}

/// x*(i,j) = conj(x(-i mod m, -j mod n)).
template <typename T>
Tensor<T> conjugate(const Tensor<T>& x) {
  const std::size_t m = x.rows(), n = x.cols();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = detail::conj_value(x(detail::mod(-static_cast<std::ptrdiff_t>(i), m),
                                        detail::mod(-static_cast<std::ptrdiff_t>(j), n)));
  return out;
}

template <typename T>
double max_abs_diff(const Tensor<T>& x, const Tensor<T>& y) {
  require_same_shape(x.shape(), y.shape(), "max_abs_diff");
  double worst = 0.0;
  auto a = x.entries();
  auto b = y.entries();
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, static_cast<double>(std::abs(a[k] - b[k])));
  return worst;
}

// ---------------------------------------------------------------------------
// 2D DFT

/// Imaginary residue below this is floating-point noise and is dropped
/// silently when a spectrum is inverted back to real data.
inline constexpr double kImagDiscardTol = 1e-10;
/// Residue at or above this means conjugate symmetry was broken upstream.
inline constexpr double kImagErrorTol = 1e-6;

/// Separable 2D DFT for one shape. Forward is unnormalized, inverse
/// carries 1/(mn). Any m, n >= 1 is supported; cost is mn(m+n) per call.
class Dft2Plan {
 public:
  explicit Dft2Plan(TensorShape shape) : shape_(shape) {
    shape_.validate();
    row_tw_ = twiddles(shape_.cols);
    col_tw_ = twiddles(shape_.rows);
  }

  const TensorShape& shape() const { return shape_; }

  void forward(std::span<const cdouble> in, std::span<cdouble> out) const { transform(in, out, false); }
  void inverse(std::span<const cdouble> in, std::span<cdouble> out) const { transform(in, out, true); }

  void forward(std::span<const double> in, std::span<cdouble> out) const {
    std::vector<cdouble> tmp(in.begin(), in.end());
    transform(tmp, out, false);
  }

 private:
  static std::vector<cdouble> twiddles(std::size_t n) {
    std::vector<cdouble> w(n);
    for (std::size_t k = 0; k < n; ++k)
      w[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    return w;
  }

  // out[k*stride] = sum_j in[j*stride] * w^(+-jk); w indexed modulo n so
  // every twiddle is an exact table lookup.
  static void dft1d(const cdouble* in, cdouble* out, std::size_t n, std::size_t stride,
                    const std::vector<cdouble>& tw, bool inverse) {
    for (std::size_t k = 0; k < n; ++k) {
      cdouble acc{};
      for (std::size_t j = 0; j < n; ++j) {
        const cdouble w = tw[(j * k) % n];
        acc += in[j * stride] * (inverse ? std::conj(w) : w);
      }
      out[k * stride] = acc;
    }
  }

  void transform(std::span<const cdouble> in, std::span<cdouble> out, bool inverse) const {
    const std::size_t m = shape_.rows, n = shape_.cols;
    if (in.size() != m * n || out.size() != m * n) throw ShapeError("dft2: buffer size does not match shape");
    std::vector<cdouble> tmp(m * n);
    for (std::size_t i = 0; i < m; ++i) dft1d(in.data() + i * n, tmp.data() + i * n, n, 1, row_tw_, inverse);
    for (std::size_t j = 0; j < n; ++j) dft1d(tmp.data() + j, out.data() + j, m, n, col_tw_, inverse);
    if (inverse) {
      const double s = 1.0 / static_cast<double>(m * n);
      for (auto& v : out) v *= s;
    }
  }

  TensorShape shape_;
  std::vector<cdouble> row_tw_;
  std::vector<cdouble> col_tw_;
};

/// Returns the real parts of `values`, applying the residue policy:
/// |imag| < 1e-10 dropped, [1e-10, 1e-6) dropped with a warning,
/// >= 1e-6 is a NumericalError. `what` names the caller in messages.
inline std::vector<double> real_part_checked(std::span<const cdouble> values, std::string_view what) {
  double worst = 0.0;
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    out[k] = values[k].real();
    worst = std::max(worst, std::abs(values[k].imag()));
  }
  if (worst >= kImagErrorTol) {
    std::ostringstream msg;
    msg << what << ": imaginary residue " << worst << " after inverse DFT of data declared real";
    throw NumericalError(msg.str());
  }
  if (worst >= kImagDiscardTol) {
    std::ostringstream msg;
    msg << what << ": discarding imaginary residue " << worst;
    warn(msg.str());
  }
  return out;
}

inline FourierScalar dft2(const TensorScalar& x) {
  Dft2Plan plan(x.shape());
  FourierScalar out(x.shape());
  plan.forward(x.entries(), out.entries());
  return out;
}

inline FourierScalar dft2(const FourierScalar& x) {
  Dft2Plan plan(x.shape());
  FourierScalar out(x.shape());
  plan.forward(x.entries(), out.entries());
  return out;
}

/// Complex inverse; no symmetry assumption.
inline FourierScalar idft2_complex(const FourierScalar& spectrum) {
  Dft2Plan plan(spectrum.shape());
  FourierScalar out(spectrum.shape());
  plan.inverse(spectrum.entries(), out.entries());
  return out;
}

/// Inverse of a conjugate-symmetric spectrum back to a real tensor.
inline TensorScalar idft2(const FourierScalar& spectrum) {
  const FourierScalar z = idft2_complex(spectrum);
  return TensorScalar(spectrum.shape(), real_part_checked(z.entries(), "idft2"));
}

/// Convolution-theorem product: idft2(dft2(x) .* dft2(y)).
inline TensorScalar multiply_fft(const TensorScalar& x, const TensorScalar& y) {
  require_same_shape(x.shape(), y.shape(), "multiply_fft");
  Dft2Plan plan(x.shape());
  std::vector<cdouble> fx(x.shape().size()), fy(x.shape().size()), z(x.shape().size());
  plan.forward(x.entries(), fx);
  plan.forward(y.entries(), fy);
  for (std::size_t k = 0; k < fx.size(); ++k) fx[k] *= fy[k];
  plan.inverse(fx, z);
  return TensorScalar(x.shape(), real_part_checked(z, "multiply_fft"));
}

/// Frequency index of the conjugate partner: (-w1 mod m, -w2 mod n).
inline std::pair<std::size_t, std::size_t> mirror_frequency(TensorShape shape, std::size_t w1, std::size_t w2) {
  return {detail::mod(-static_cast<std::ptrdiff_t>(w1), shape.rows),
          detail::mod(-static_cast<std::ptrdiff_t>(w2), shape.cols)};
}

}  // namespace tpca
