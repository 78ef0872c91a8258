#pragma once

#include <complex>
#include <numbers>
#include <random>

#include "tpca/tensor_linalg.hpp"

namespace tpca::test {

inline TensorScalar random_tensor(std::mt19937_64& rng, TensorShape shape, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  TensorScalar x(shape);
  for (auto& v : x.entries()) v = u(rng);
  return x;
}

inline CMatrix random_cmatrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, TensorShape shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMatrix x(rows, cols, shape);
  for (auto& v : x.data()) v = u(rng);
  return x;
}

inline CVector random_cvector(std::mt19937_64& rng, std::size_t len, TensorShape shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVector x(len, shape);
  for (auto& v : x.data()) v = u(rng);
  return x;
}

/// A + A^H for random A.
inline CMatrix random_hermitian(std::mt19937_64& rng, std::size_t dim, TensorShape shape) {
  const CMatrix a = random_cmatrix(rng, dim, dim, shape);
  const CMatrix ah = hermitian(a);
  CMatrix g(dim, dim, shape);
  for (std::size_t k = 0; k < g.data().size(); ++k) g.data()[k] = a.data()[k] + ah.data()[k];
  return g;
}

/// Textbook 2D DFT, one complex exponential per term. Independent of the
/// library's separable implementation.
inline FourierScalar naive_dft2(const TensorScalar& x) {
  const std::size_t m = x.rows(), n = x.cols();
  FourierScalar out(x.shape());
  for (std::size_t w1 = 0; w1 < m; ++w1)
    for (std::size_t w2 = 0; w2 < n; ++w2) {
      std::complex<double> acc{};
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double phase = -2.0 * std::numbers::pi *
                               (static_cast<double>(w1 * i) / static_cast<double>(m) +
                                static_cast<double>(w2 * j) / static_cast<double>(n));
          acc += x(i, j) * std::polar(1.0, phase);
        }
      out(w1, w2) = acc;
    }
  return out;
}

}  // namespace tpca::test
