#pragma once

#include <functional>

#include "mcuf/core.hpp"
#include "mcuf/correntropy.hpp"
#include "mcuf/unscented.hpp"

namespace mcuf {

/// Whitened statistical linear regression D = W x + e, with e ~ (0, I).
///
/// The stacked observation is [x_prior; y - y_pred + H x_prior] and the
/// whitening factor is blockdiag(S_p, S_r) with P_prior = S_p S_p^T and
/// R = S_r S_r^T.
struct RegressionModel {
  Vector D;
  Matrix W;
  Matrix H;
  CholeskyFactor S_p;
  CholeskyFactor S_r;
  Vector prior_mean;
  Vector y_pred;
  Vector y;

  Eigen::Index n() const { return prior_mean.size(); }
  Eigen::Index m() const { return y.size(); }
  Eigen::Index L() const { return n() + m(); }

  Vector innovation() const { return y - y_pred; }

  /// D - W x, evaluated as whitened differences from the prior so the large
  /// common offset in D and W x never gets subtracted.
  Vector residuals(const Vector& x) const;
};

enum class InitMode { prior, least_squares };

struct McufConfig {
  KernelBandwidth sigma{2.0};
  double epsilon = 1e-6;
  int max_iterations = 50;
  InitMode init = InitMode::least_squares;

  void validate() const;
};

struct FixedPointTrace {
  int iterations = 0;
  bool converged = false;
  /// The step hit the iteration cap with a relative step above 1 and the
  /// least-squares update was used instead.
  bool fell_back = false;
  double last_relative_step = 0.0;
  /// Diagonals of C_x and C_y that produced the returned iterate.
  Vector final_weights;
};

enum class FixedPointStatus { converged, iteration_cap, diverged };

/// Maps whitened residuals to diagonal weights in (0, 1].
using ResidualWeights = std::function<Vector(const Vector& residuals)>;

/// Called once per fixed-point iteration with the weights used, the
/// previous iterate and the new one.
using IterationObserver = std::function<void(const RegressionModel& reg, const Vector& weights,
                                             const Vector& previous, const Vector& next)>;

struct ReweightOptions {
  double epsilon = 1e-6;
  int max_iterations = 50;
  InitMode init = InitMode::least_squares;
};

struct ReweightedSolution {
  Vector mean;
  Matrix gain;
  FixedPointTrace trace;
  FixedPointStatus status = FixedPointStatus::converged;
  Vector initial_iterate;
};

/// Smallest weight ever fed into the C^{-1} inversions.
inline constexpr double kMinKernelWeight = 1e-300;

/// Gaussian-kernel weights G_sigma(e_i), floored at kMinKernelWeight.
ResidualWeights correntropy_weights(KernelBandwidth sigma);

/// H = (P_prior^{-1} P_xy)^T.
Matrix measurement_slope(const Matrix& P_prior, const Matrix& P_xy);

RegressionModel build_regression(const GaussianBelief& prior, const Matrix& H, const Matrix& R,
                                 const Vector& y, const Vector& y_pred);

/// K = P~ H^T (H P~ H^T + R~)^{-1} with P~ = S_p C_x^{-1} S_p^T and
/// R~ = S_r C_y^{-1} S_r^T. `weights` holds the n + m diagonal entries.
Matrix weighted_gain(const RegressionModel& reg, const Vector& weights);

/// Unit-weight solution (W^T W)^{-1} W^T D, computed in gain form.
Vector least_squares_solution(const RegressionModel& reg);

/// Iteratively reweighted regression x_t = x_prior + K(x_{t-1}) (y - y_pred),
/// stopping once ||x_t - x_{t-1}|| / ||x_{t-1}|| <= epsilon (absolute step
/// when ||x_{t-1}|| == 0). Never throws on non-convergence; see `status`.
ReweightedSolution solve_reweighted(const RegressionModel& reg, const ResidualWeights& weights,
                                    const ReweightOptions& opts,
                                    const IterationObserver& observer = {});

struct FixedPointResult {
  Vector mean;
  Matrix gain;
  FixedPointTrace trace;
};

/// MCC fixed-point measurement update. Throws Diverged when the iteration
/// cap is reached with a relative step still above 1.
FixedPointResult fixed_point_update(const RegressionModel& reg, const McufConfig& cfg,
                                    const IterationObserver& observer = {});

struct GainFormPair {
  Vector matrix_form;
  Vector gain_form;
};

/// Solves the weighted regression both as (W^T C W)^{-1} W^T C D and through
/// the Kalman-gain rewrite. Test hook for the matrix inversion lemma.
GainFormPair gain_form_equivalence(const RegressionModel& reg, const Vector& weights);

/// Joseph form (I - K H) P (I - K H)^T + K R K^T, symmetrized.
Matrix posterior_covariance(const Matrix& P_prior, const Matrix& H, const Matrix& R,
                            const Matrix& gain);

struct FilterStepResult {
  GaussianBelief belief;
  FixedPointTrace trace;
};

/// Measurement update shared by MCUF, HUKF and HEKF: builds the regression
/// from a prior and slope matrix, runs the reweighted solver and applies the
/// Joseph covariance with the final gain. A diverged solve falls back to the
/// least-squares update and is flagged in the trace.
FilterStepResult reweighted_measurement_update(const GaussianBelief& prior, const Matrix& H,
                                               const Matrix& R, const Vector& y,
                                               const Vector& y_pred, const ResidualWeights& weights,
                                               const ReweightOptions& opts,
                                               const IterationObserver& observer = {});

FilterStepResult mcuf_step(const GaussianBelief& belief, const SystemModel& model,
                           const UTConfig& ut_cfg, const McufConfig& mc_cfg, const Vector& y,
                           int k, const IterationObserver& observer = {});

}  // namespace mcuf
