#include "mcuf/unscented.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

namespace mcuf {

double scaling_factor(Eigen::Index n, const UTConfig& cfg) {
  if (n < 1) {
    throw InvalidArgument("state dimension must be >= 1");
  }
  if (!(cfg.alpha > 0.0)) {
    throw InvalidScaling("UT alpha must be positive");
  }
  const auto nd = static_cast<double>(n);
  const double lambda = cfg.alpha * cfg.alpha * (nd + cfg.phi_for(n)) - nd;
  if (!(nd + lambda > 0.0)) {
    throw InvalidScaling("n + lambda must be positive, got " + std::to_string(nd + lambda));
  }
  return lambda;
}

SigmaPointSet generate_sigma_points(const GaussianBelief& belief, const UTConfig& cfg) {
  const Eigen::Index n = belief.dim();
  if (belief.covariance.rows() != n || belief.covariance.cols() != n) {
    throw DimensionMismatch("belief covariance does not match mean");
  }
  const double lambda = scaling_factor(n, cfg);
  const double spread = static_cast<double>(n) + lambda;

  const CholeskyFactor root = cholesky(spread * belief.covariance);

  SigmaPointSet set;
  set.points.resize(n, 2 * n + 1);
  set.points.col(0) = belief.mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    set.points.col(1 + i) = belief.mean + root.lower.col(i);
    set.points.col(1 + n + i) = belief.mean - root.lower.col(i);
  }

  set.wm = Vector::Constant(2 * n + 1, 1.0 / (2.0 * spread));
  set.wc = set.wm;
  set.wm(0) = lambda / spread;
  set.wc(0) = lambda / spread + (1.0 - cfg.alpha * cfg.alpha + cfg.beta);
  return set;
}

UTMoments unscented_moments(const SigmaPointSet& points, const PointMap& map,
                            const Matrix& additive_cov) {
  const Eigen::Index count = points.size();
  if (points.wm.size() != count || points.wc.size() != count) {
    throw DimensionMismatch("sigma point weights do not match point count");
  }

  UTMoments out;
  const Vector first = map(points.points.col(0));
  out.mapped.resize(first.size(), count);
  out.mapped.col(0) = first;
  for (Eigen::Index i = 1; i < count; ++i) {
    Vector v = map(points.points.col(i));
    if (v.size() != first.size()) {
      throw DimensionMismatch("mapped sigma points have inconsistent dimension");
    }
    out.mapped.col(i) = std::move(v);
  }

  out.mean = out.mapped * points.wm;
  const Matrix dev = out.mapped.colwise() - out.mean;
  Matrix cov = dev * points.wc.asDiagonal() * dev.transpose();
  if (additive_cov.size() != 0) {
    if (additive_cov.rows() != cov.rows() || additive_cov.cols() != cov.cols()) {
      throw DimensionMismatch("additive covariance does not match mapped dimension");
    }
    cov += additive_cov;
  }
  out.covariance = symmetrize(cov);
  return out;
}

Matrix cross_covariance(const SigmaPointSet& points, const Vector& prior_mean,
                        const Matrix& mapped, const Vector& mapped_mean) {
  if (mapped.cols() != points.size()) {
    throw DimensionMismatch("cross_covariance: need one mapped point per sigma point");
  }
  if (prior_mean.size() != points.dim() || mapped_mean.size() != mapped.rows()) {
    throw DimensionMismatch("cross_covariance: mean dimension mismatch");
  }
  const Matrix dx = points.points.colwise() - prior_mean;
  const Matrix dy = mapped.colwise() - mapped_mean;
  return dx * points.wc.asDiagonal() * dy.transpose();
}

GaussianBelief unscented_predict(const GaussianBelief& belief, const SystemModel& model,
                                 const UTConfig& cfg, int k) {
  const SigmaPointSet pts = generate_sigma_points(belief, cfg);
  UTMoments m = unscented_moments(
      pts, [&](const Vector& x) { return model.f(k, x); }, model.Q);
  return GaussianBelief{std::move(m.mean), std::move(m.covariance)};
}

MeasurementPrediction predict_measurement(const GaussianBelief& prior, const SystemModel& model,
                                          const UTConfig& cfg, int k) {
  MeasurementPrediction out;
  out.points = generate_sigma_points(prior, cfg);
  UTMoments m = unscented_moments(
      out.points, [&](const Vector& x) { return model.h(k, x); }, Matrix());
  out.pxy = cross_covariance(out.points, prior.mean, m.mapped, m.mean);
  out.y_pred = std::move(m.mean);
  out.pyy = std::move(m.covariance);
  return out;
}

GaussianBelief ukf_step(const GaussianBelief& belief, const SystemModel& model,
                        const UTConfig& cfg, const Vector& y, int k) {
  if (y.size() != model.m) {
    throw DimensionMismatch("measurement length does not match model");
  }
  const GaussianBelief prior = unscented_predict(belief, model, cfg, k);
  const MeasurementPrediction pred = predict_measurement(prior, model, cfg, k);

  const Matrix pyy = symmetrize(pred.pyy + model.R);
  const CholeskyFactor pyy_chol = cholesky(pyy);
  // K = Pxy Pyy^{-1}  <=>  K^T = Pyy^{-1} Pxy^T
  const Matrix gain = pyy_chol.solve(Matrix(pred.pxy.transpose())).transpose();

  GaussianBelief post;
  post.mean = prior.mean + gain * (y - pred.y_pred);
  post.covariance = symmetrize(prior.covariance - gain * pyy * gain.transpose());
  return post;
}

}  // namespace mcuf
