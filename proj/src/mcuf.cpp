#include "mcuf/mcuf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

namespace mcuf {

Vector RegressionModel::residuals(const Vector& x) const {
  if (x.size() != n()) {
    throw DimensionMismatch("regression residuals: state dimension mismatch");
  }
  const Vector dx = x - prior_mean;
  Vector e(L());
  e.head(n()) = S_p.solve_lower(Vector(-dx));
  e.tail(m()) = S_r.solve_lower(Vector(innovation() - H * dx));
  return e;
}

void McufConfig::validate() const {
  if (!(epsilon > 0.0)) {
    throw InvalidArgument("fixed-point epsilon must be positive");
  }
  if (max_iterations < 1) {
    throw InvalidArgument("max_iterations must be >= 1");
  }
}

ResidualWeights correntropy_weights(KernelBandwidth sigma) {
  return [sigma](const Vector& e) {
    Vector w(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      w[i] = std::max(gaussian_kernel(e[i], sigma), kMinKernelWeight);
    }
    return w;
  };
}

Matrix measurement_slope(const Matrix& P_prior, const Matrix& P_xy) {
  require_square(P_prior, "prior covariance");
  if (P_xy.rows() != P_prior.rows()) {
    throw DimensionMismatch("cross-covariance rows must match state dimension");
  }
  return cholesky(P_prior).solve(P_xy).transpose();
}

RegressionModel build_regression(const GaussianBelief& prior, const Matrix& H, const Matrix& R,
                                 const Vector& y, const Vector& y_pred) {
  const Eigen::Index n = prior.dim();
  const Eigen::Index m = y.size();
  if (prior.covariance.rows() != n || prior.covariance.cols() != n) {
    throw DimensionMismatch("prior covariance does not match mean");
  }
  if (H.rows() != m || H.cols() != n) {
    throw DimensionMismatch("slope matrix must be m x n");
  }
  if (R.rows() != m || R.cols() != m || y_pred.size() != m) {
    throw DimensionMismatch("R / predicted measurement do not match measurement");
  }

  RegressionModel reg;
  reg.S_p = cholesky(prior.covariance);
  reg.S_r = cholesky(R);
  reg.H = H;
  reg.prior_mean = prior.mean;
  reg.y_pred = y_pred;
  reg.y = y;

  reg.D.resize(n + m);
  reg.D.head(n) = reg.S_p.solve_lower(prior.mean);
  reg.D.tail(m) = reg.S_r.solve_lower(Vector(y - y_pred + H * prior.mean));

  reg.W.resize(n + m, n);
  reg.W.topRows(n) = reg.S_p.solve_lower(Matrix(Matrix::Identity(n, n)));
  reg.W.bottomRows(m) = reg.S_r.solve_lower(H);
  return reg;
}

Matrix weighted_gain(const RegressionModel& reg, const Vector& weights) {
  const Eigen::Index n = reg.n();
  const Eigen::Index m = reg.m();
  if (weights.size() != n + m) {
    throw DimensionMismatch("weight vector must have n + m entries");
  }
  if ((weights.array() <= 0.0).any()) {
    throw InvalidArgument("weights must be strictly positive");
  }
  const Vector inv_wx = weights.head(n).cwiseInverse();
  const Vector inv_wy = weights.tail(m).cwiseInverse();
  const Matrix& sp = reg.S_p.lower;
  const Matrix& sr = reg.S_r.lower;
  const Matrix p_w = sp * inv_wx.asDiagonal() * sp.transpose();
  const Matrix r_w = sr * inv_wy.asDiagonal() * sr.transpose();

  const Matrix pht = p_w * reg.H.transpose();
  const Matrix innov_cov = symmetrize(reg.H * pht + r_w);
  const CholeskyFactor chol = cholesky(innov_cov);
  // K^T = (H P~ H^T + R~)^{-1} H P~
  return chol.solve(Matrix(pht.transpose())).transpose();
}

Vector least_squares_solution(const RegressionModel& reg) {
  const Matrix gain = weighted_gain(reg, Vector::Ones(reg.L()));
  return reg.prior_mean + gain * reg.innovation();
}

ReweightedSolution solve_reweighted(const RegressionModel& reg, const ResidualWeights& weights,
                                    const ReweightOptions& opts,
                                    const IterationObserver& observer) {
  if (!(opts.epsilon > 0.0) || opts.max_iterations < 1) {
    throw InvalidArgument("fixed-point options need epsilon > 0 and max_iterations >= 1");
  }
  const Vector innovation = reg.innovation();

  ReweightedSolution sol;
  sol.initial_iterate =
      opts.init == InitMode::least_squares ? least_squares_solution(reg) : reg.prior_mean;

  Vector previous = sol.initial_iterate;
  double rel_step = 0.0;
  int t = 0;
  bool converged = false;
  while (t < opts.max_iterations) {
    ++t;
    const Vector w = weights(reg.residuals(previous));
    Matrix gain = weighted_gain(reg, w);
    Vector next = reg.prior_mean + gain * innovation;
    if (!next.allFinite()) {
      throw NotPositiveDefinite("fixed-point iterate became non-finite");
    }
    if (observer) observer(reg, w, previous, next);

    const double step = (next - previous).norm();
    const double base = previous.norm();
    rel_step = base > 0.0 ? step / base : step;

    sol.mean = std::move(next);
    sol.gain = std::move(gain);
    sol.trace.final_weights = w;
    previous = sol.mean;
    if (rel_step <= opts.epsilon) {
      converged = true;
      break;
    }
  }

  sol.trace.iterations = t;
  sol.trace.converged = converged;
  sol.trace.last_relative_step = rel_step;
  if (converged) {
    sol.status = FixedPointStatus::converged;
  } else if (rel_step > 1.0) {
    sol.status = FixedPointStatus::diverged;
  } else {
    sol.status = FixedPointStatus::iteration_cap;
  }
  return sol;
}

FixedPointResult fixed_point_update(const RegressionModel& reg, const McufConfig& cfg,
                                    const IterationObserver& observer) {
  cfg.validate();
  ReweightedSolution sol =
      solve_reweighted(reg, correntropy_weights(cfg.sigma),
                       ReweightOptions{cfg.epsilon, cfg.max_iterations, cfg.init}, observer);
  if (sol.status == FixedPointStatus::diverged) {
    throw Diverged("fixed-point iteration diverged after " +
                   std::to_string(sol.trace.iterations) +
                   " iterations (relative step " + std::to_string(sol.trace.last_relative_step) +
                   "); kernel bandwidth too small?");
  }
  return FixedPointResult{std::move(sol.mean), std::move(sol.gain), std::move(sol.trace)};
}

GainFormPair gain_form_equivalence(const RegressionModel& reg, const Vector& weights) {
  if (weights.size() != reg.L()) {
    throw DimensionMismatch("weight vector must have n + m entries");
  }
  const Matrix wtc = reg.W.transpose() * weights.asDiagonal();
  const Matrix normal = symmetrize(wtc * reg.W);
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("W^T C W is not positive definite");
  }
  GainFormPair out;
  out.matrix_form = llt.solve(Vector(wtc * reg.D));
  out.gain_form = reg.prior_mean + weighted_gain(reg, weights) * reg.innovation();
  return out;
}

Matrix posterior_covariance(const Matrix& P_prior, const Matrix& H, const Matrix& R,
                            const Matrix& gain) {
  require_square(P_prior, "prior covariance");
  require_square(R, "R");
  const Eigen::Index n = P_prior.rows();
  const Eigen::Index m = R.rows();
  if (H.rows() != m || H.cols() != n || gain.rows() != n || gain.cols() != m) {
    throw DimensionMismatch("posterior_covariance: inconsistent H / gain dimensions");
  }
  const Matrix ikh = Matrix::Identity(n, n) - gain * H;
  return symmetrize(ikh * P_prior * ikh.transpose() + gain * R * gain.transpose());
}

FilterStepResult reweighted_measurement_update(const GaussianBelief& prior, const Matrix& H,
                                               const Matrix& R, const Vector& y,
                                               const Vector& y_pred, const ResidualWeights& weights,
                                               const ReweightOptions& opts,
                                               const IterationObserver& observer) {
  const RegressionModel reg = build_regression(prior, H, R, y, y_pred);
  ReweightedSolution sol = solve_reweighted(reg, weights, opts, observer);

  if (sol.status == FixedPointStatus::diverged) {
    sol.gain = weighted_gain(reg, Vector::Ones(reg.L()));
    sol.mean = reg.prior_mean + sol.gain * reg.innovation();
    sol.trace.fell_back = true;
  }

  FilterStepResult out;
  out.belief.mean = std::move(sol.mean);
  out.belief.covariance = posterior_covariance(prior.covariance, H, R, sol.gain);
  out.trace = std::move(sol.trace);
  return out;
}

FilterStepResult mcuf_step(const GaussianBelief& belief, const SystemModel& model,
                           const UTConfig& ut_cfg, const McufConfig& mc_cfg, const Vector& y,
                           int k, const IterationObserver& observer) {
  mc_cfg.validate();
  if (y.size() != model.m) {
    throw DimensionMismatch("measurement length does not match model");
  }
  const GaussianBelief prior = unscented_predict(belief, model, ut_cfg, k);
  const MeasurementPrediction pred = predict_measurement(prior, model, ut_cfg, k);
  const Matrix H = measurement_slope(prior.covariance, pred.pxy);
  return reweighted_measurement_update(
      prior, H, model.R, y, pred.y_pred, correntropy_weights(mc_cfg.sigma),
      ReweightOptions{mc_cfg.epsilon, mc_cfg.max_iterations, mc_cfg.init}, observer);
}

}  // namespace mcuf
