#include "mcuf/baselines.hpp"

#include <cmath>

namespace mcuf {

namespace {

ResidualWeights huber_weights(double gamma) {
  return [gamma](const Vector& e) { return huber_reweight(e, gamma); };
}

void require_jacobians(const SystemModel& model) {
  if (!model.has_jacobians()) {
    throw InvalidArgument("EKF-family filters need analytic Jacobians on the model");
  }
}

}  // namespace

void HuberConfig::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("Huber gamma must be positive");
  if (!(epsilon > 0.0)) throw InvalidArgument("Huber epsilon must be positive");
  if (max_iterations < 1) throw InvalidArgument("Huber max_iterations must be >= 1");
}

Vector huber_reweight(const Vector& residuals, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("Huber gamma must be positive");
  Vector w(residuals.size());
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    const double a = std::abs(residuals[i]);
    w[i] = a <= gamma ? 1.0 : gamma / a;
  }
  return w;
}

GaussianBelief ekf_predict(const GaussianBelief& belief, const SystemModel& model, int k) {
  require_jacobians(model);
  const Matrix F = model.jacobian_f(k, belief.mean);
  GaussianBelief prior;
  prior.mean = model.f(k, belief.mean);
  prior.covariance = symmetrize(F * belief.covariance * F.transpose() + model.Q);
  return prior;
}

GaussianBelief ekf_step(const GaussianBelief& belief, const SystemModel& model, const Vector& y,
                        int k) {
  if (y.size() != model.m) {
    throw DimensionMismatch("measurement length does not match model");
  }
  const GaussianBelief prior = ekf_predict(belief, model, k);
  const Matrix H = model.jacobian_h(k, prior.mean);
  const Vector y_pred = model.h(k, prior.mean);

  const Matrix pht = prior.covariance * H.transpose();
  const CholeskyFactor s = cholesky(symmetrize(H * pht + model.R));
  const Matrix gain = s.solve(Matrix(pht.transpose())).transpose();

  GaussianBelief post;
  post.mean = prior.mean + gain * (y - y_pred);
  post.covariance = posterior_covariance(prior.covariance, H, model.R, gain);
  return post;
}

FilterStepResult hekf_step(const GaussianBelief& belief, const SystemModel& model,
                           const HuberConfig& cfg, const Vector& y, int k,
                           const IterationObserver& observer) {
  cfg.validate();
  if (y.size() != model.m) {
    throw DimensionMismatch("measurement length does not match model");
  }
  const GaussianBelief prior = ekf_predict(belief, model, k);
  const Matrix H = model.jacobian_h(k, prior.mean);
  const Vector y_pred = model.h(k, prior.mean);
  return reweighted_measurement_update(
      prior, H, model.R, y, y_pred, huber_weights(cfg.gamma),
      ReweightOptions{cfg.epsilon, cfg.max_iterations, InitMode::least_squares}, observer);
}

FilterStepResult hukf_step(const GaussianBelief& belief, const SystemModel& model,
                           const UTConfig& ut_cfg, const HuberConfig& cfg, const Vector& y, int k,
                           const IterationObserver& observer) {
  cfg.validate();
  if (y.size() != model.m) {
    throw DimensionMismatch("measurement length does not match model");
  }
  const GaussianBelief prior = unscented_predict(belief, model, ut_cfg, k);
  const MeasurementPrediction pred = predict_measurement(prior, model, ut_cfg, k);
  const Matrix H = measurement_slope(prior.covariance, pred.pxy);
  return reweighted_measurement_update(
      prior, H, model.R, y, pred.y_pred, huber_weights(cfg.gamma),
      ReweightOptions{cfg.epsilon, cfg.max_iterations, InitMode::least_squares}, observer);
}

}  // namespace mcuf
