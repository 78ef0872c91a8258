#pragma once

// Tensor PCA over C-vectors, fitted once in the Fourier domain and then
// applied to many queries.
//
// Fit: mean C-vector, per-frequency covariance of the centered, transformed
// samples, and its slice SVD (canonical half-spectrum, mirrored slices
// conjugated). Transform: U(w)^H applied per frequency, back to the
// spatial domain, averaged over the mn positions (the delta map), then
// truncated to the first d entries.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tpca/errors.hpp"
#include "tpca/parallel.hpp"
#include "tpca/pca.hpp"
#include "tpca/tensor_linalg.hpp"
#include "tpca/tensor_ring.hpp"

namespace tpca {

/// Collapses a C-vector to a field vector by averaging every entry over
/// its mn positions.
inline Eigen::VectorXd delta_map(const CVector& y) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(y.size()));
  const double inv = 1.0 / static_cast<double>(y.shape().size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    double acc = 0.0;
    for (double v : y.entry_span(k)) acc += v;
    out(static_cast<Eigen::Index>(k)) = acc * inv;
  }
  return out;
}

/// The same map read off a transformed C-vector: zero-frequency slice / mn.
inline Eigen::VectorXd delta_map(const FourierSliceStack& y) {
  if (y.cols != 1) throw ShapeError("delta_map: expected a C-vector stack");
  return y.slices[0].col(0).real() / static_cast<double>(y.shape.size());
}

class TpcaModel {
 public:
  TpcaModel() = default;

  /// Assembles a model from its parts (used by fitting and by the loader).
  TpcaModel(CVector mean, FourierSliceStack projection, std::vector<Eigen::VectorXd> singular_values)
      : mean_(std::move(mean)), proj_(std::move(projection)), sv_(std::move(singular_values)) {
    if (proj_.rows != mean_.size() || proj_.cols != mean_.size())
      throw ShapeError("tpca model: projection size does not match mean length");
    require_same_shape(proj_.shape, mean_.shape(), "tpca model");
    if (sv_.size() != mean_.shape().size()) throw ShapeError("tpca model: need one singular-value list per frequency");
  }

  std::size_t dim() const { return mean_.size(); }
  const TensorShape& shape() const { return mean_.shape(); }
  const CVector& mean() const { return mean_; }
  const FourierSliceStack& projection() const { return proj_; }
  const std::vector<Eigen::VectorXd>& singular_values() const { return sv_; }

  /// U^H o (Y - mean), as a real C-vector, computed slice by slice.
  CVector project(const CVector& y) const {
    check_query(y);
    CVector centered(y.size(), y.shape());
    for (std::size_t k = 0; k < centered.data().size(); ++k) centered.data()[k] = y.data()[k] - mean_.data()[k];
    const FourierSliceStack yf = dft(centered);
    FourierSliceStack out(dim(), 1, shape());
    for (std::size_t f = 0; f < yf.slices.size(); ++f) out.slices[f].noalias() = proj_.slices[f].adjoint() * yf.slices[f];
    return CVector::from_column(idft(out));
  }

  /// Every-slice route: project, delta map, keep the first d entries.
  FeatureVector transform_full(const CVector& y, std::size_t d) const {
    check_feature_count(d, dim());
    return delta_map(project(y)).head(static_cast<Eigen::Index>(d));
  }

  /// Zero-frequency route. The delta map only sees the DC slice, and
  /// (U^H Y_f)(0,0) = U(0,0)^H * sum over positions of (Y - mean), so the
  /// other slices never need to be formed. Agrees with transform_full.
  FeatureVector transform(const CVector& y, std::size_t d) const {
    check_query(y);
    check_feature_count(d, dim());
    const std::size_t mn = shape().size();
    Eigen::VectorXd dc(static_cast<Eigen::Index>(dim()));
    for (std::size_t k = 0; k < dim(); ++k) {
      auto ys = y.entry_span(k);
      auto ms = mean_.entry_span(k);
      double acc = 0.0;
      for (std::size_t p = 0; p < mn; ++p) acc += ys[p] - ms[p];
      dc(static_cast<Eigen::Index>(k)) = acc;
    }
    const auto head = proj_.slices[0].leftCols(static_cast<Eigen::Index>(d)).real();
    return head.transpose() * dc / static_cast<double>(mn);
  }

 private:
  void check_query(const CVector& y) const {
    require_same_shape(y.shape(), shape(), "tpca transform");
    if (y.size() != dim())
      throw ShapeError("tpca transform: query has " + std::to_string(y.size()) + " bands, model has " +
                       std::to_string(dim()));
  }

  CVector mean_;
  FourierSliceStack proj_;
  std::vector<Eigen::VectorXd> sv_;
};

/// Fits TPCA on N >= 2 C-vectors sharing one shape and length.
inline TpcaModel fit_tpca(std::span<const CVector> samples) {
  if (samples.size() < 2) throw ConfigError("tpca fit needs at least 2 samples");
  const TensorShape shape = samples[0].shape();
  const std::size_t dim = samples[0].size();
  if (dim == 0) throw ShapeError("tpca fit: samples have no bands");
  for (const auto& s : samples) {
    require_same_shape(s.shape(), shape, "tpca fit");
    if (s.size() != dim) throw ShapeError("tpca fit: samples differ in length");
  }
  const std::size_t n = samples.size();
  const std::size_t mn = shape.size();

  CVector mean(dim, shape);
  for (const auto& s : samples)
    for (std::size_t k = 0; k < mean.data().size(); ++k) mean.data()[k] += s.data()[k];
  for (auto& v : mean.data()) v /= static_cast<double>(n);

  // Centered samples in the Fourier domain: one D x N matrix per frequency.
  std::vector<Eigen::MatrixXcd> xf(mn, Eigen::MatrixXcd(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n)));
  const Dft2Plan plan(shape);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> centered(mn);
    std::vector<cdouble> spec(mn);
    for (std::size_t k = 0; k < dim; ++k) {
      auto s = samples[i].entry_span(k);
      auto m = mean.entry_span(k);
      for (std::size_t p = 0; p < mn; ++p) centered[p] = s[p] - m[p];
      plan.forward(centered, spec);
      for (std::size_t f = 0; f < mn; ++f) xf[f](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = spec[f];
    }
  });

  FourierSliceStack cov(dim, dim, shape);
  const double inv = 1.0 / static_cast<double>(n - 1);
  std::vector<std::size_t> canonical;
  for (std::size_t f = 0; f < mn; ++f)
    if (is_canonical_frequency(shape, f / shape.cols, f % shape.cols)) canonical.push_back(f);
  parallel_for(canonical.size(), [&](std::size_t idx) {
    const std::size_t f = canonical[idx];
    cov.slices[f].noalias() = xf[f] * xf[f].adjoint();
    cov.slices[f] *= inv;
    auto [m1, m2] = mirror_frequency(shape, f / shape.cols, f % shape.cols);
    const std::size_t mf = m1 * shape.cols + m2;
    if (mf != f) cov.slices[mf] = cov.slices[f].conjugate();
  });

  TsvdFactors factors = tsvd_slices(cov);
  std::vector<Eigen::VectorXd> sv(mn);
  for (std::size_t f = 0; f < mn; ++f) sv[f] = factors.s.slices[f].diagonal().real();
  return TpcaModel(std::move(mean), std::move(factors.u), std::move(sv));
}

inline TpcaModel fit_tpca(const std::vector<CVector>& samples) { return fit_tpca(std::span<const CVector>(samples)); }

}  // namespace tpca
