#pragma once

#include <optional>
#include <vector>

#include "mcuf/core.hpp"

namespace mcuf {

/// Unscented transform parameters. `phi` defaults to 3 - n when unset.
struct UTConfig {
  double alpha = 1.0;
  double beta = 2.0;
  std::optional<double> phi;

  double phi_for(Eigen::Index n) const {
    return phi ? *phi : 3.0 - static_cast<double>(n);
  }
};

struct SigmaPointSet {
  /// n x (2n+1), one point per column; column 0 is the mean.
  Matrix points;
  Vector wm;
  Vector wc;

  Eigen::Index size() const { return points.cols(); }
  Eigen::Index dim() const { return points.rows(); }
};

struct UTMoments {
  Vector mean;
  Matrix covariance;
  /// Mapped sigma points, one per column (needed for cross-covariances).
  Matrix mapped;
};

/// lambda = alpha^2 (n + phi) - n. Throws InvalidScaling if n + lambda <= 0.
double scaling_factor(Eigen::Index n, const UTConfig& cfg);

SigmaPointSet generate_sigma_points(const GaussianBelief& belief, const UTConfig& cfg);

using PointMap = std::function<Vector(const Vector&)>;

/// Weighted mean/covariance of `map` over the sigma points, plus
/// `additive_cov` (pass an empty matrix for none).
UTMoments unscented_moments(const SigmaPointSet& points, const PointMap& map,
                            const Matrix& additive_cov);

/// sum wc_i (chi_i - prior_mean)(gamma_i - mapped_mean)^T, an n x m matrix.
Matrix cross_covariance(const SigmaPointSet& points, const Vector& prior_mean,
                        const Matrix& mapped, const Vector& mapped_mean);

/// Time update shared by the UKF and MCUF: sigma points of the previous
/// posterior pushed through f(k, .) with Q added.
GaussianBelief unscented_predict(const GaussianBelief& belief, const SystemModel& model,
                                 const UTConfig& cfg, int k);

/// Measurement prediction from a prior: sigma points redrawn from the prior,
/// mapped through h(k, .).
struct MeasurementPrediction {
  SigmaPointSet points;
  Vector y_pred;
  /// sum wc (gamma - y_pred)(.)^T, without R.
  Matrix pyy;
  Matrix pxy;
};

MeasurementPrediction predict_measurement(const GaussianBelief& prior, const SystemModel& model,
                                          const UTConfig& cfg, int k);

GaussianBelief ukf_step(const GaussianBelief& belief, const SystemModel& model,
                        const UTConfig& cfg, const Vector& y, int k);

}  // namespace mcuf
