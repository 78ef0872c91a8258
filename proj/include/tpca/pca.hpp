#pragma once

// Classical PCA: sample mean, unbiased covariance, descending eigenbasis.

#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "tpca/errors.hpp"
#include "tpca/tensor_linalg.hpp"

namespace tpca {

using FeatureVector = Eigen::VectorXd;

/// Eigenvalues this far below zero (relative to the largest) are treated
/// as rounding and clamped to 0.
inline constexpr double kEigenClampTol = 1e-10;

inline void check_feature_count(std::size_t d, std::size_t dim) {
  if (d < 1 || d > dim)
    throw ConfigError("feature count d=" + std::to_string(d) + " outside [1, " + std::to_string(dim) + "]");
}

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // columns are eigenvectors, descending eigenvalue
  Eigen::VectorXd eigenvalues;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }

  /// First d coordinates of U^T (y - mean).
  FeatureVector transform(const Eigen::VectorXd& y, std::size_t d) const {
    if (static_cast<std::size_t>(y.size()) != dim())
      throw ShapeError("pca transform: query has " + std::to_string(y.size()) + " bands, model has " +
                       std::to_string(dim()));
    check_feature_count(d, dim());
    return basis.leftCols(static_cast<Eigen::Index>(d)).transpose() * (y - mean);
  }

  /// Maps a (possibly truncated) feature back to data space.
  Eigen::VectorXd reconstruct(const FeatureVector& f) const {
    return mean + basis.leftCols(f.size()) * f;
  }
};

/// Fits PCA to the rows of `samples` (N x D, N >= 2).
inline PcaModel fit_pca(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw ConfigError("pca fit needs at least 2 samples");
  if (samples.cols() < 1) throw ShapeError("pca fit: samples have no bands");
  const double n = static_cast<double>(samples.rows());

  PcaModel model;
  model.mean = samples.colwise().sum().transpose() / n;
  const Eigen::MatrixXd centered = samples.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / (n - 1.0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("pca fit: eigendecomposition failed");

  const auto order = detail::descending_order(eig.eigenvalues());
  const Eigen::Index d = samples.cols();
  const double top = std::max(1.0, std::abs(eig.eigenvalues().maxCoeff()));
  model.basis.resize(d, d);
  model.eigenvalues.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    double lambda = eig.eigenvalues()(src);
    if (lambda < 0.0) {
      if (lambda < -kEigenClampTol * top) throw NumericalError("pca fit: covariance is not positive semidefinite");
      lambda = 0.0;
    }
    Eigen::VectorXd u = eig.eigenvectors().col(src);
    if (u(detail::pivot_component(u)) < 0.0) u = -u;
    model.basis.col(k) = u;
    model.eigenvalues(k) = lambda;
  }
  return model;
}

}  // namespace tpca
