#pragma once

#include "mcuf/core.hpp"
#include "mcuf/mcuf.hpp"
#include "mcuf/unscented.hpp"

namespace mcuf {

struct HuberConfig {
  double gamma = 1.345;
  double epsilon = 1e-6;
  int max_iterations = 50;

  void validate() const;
};

/// psi(e)/e for Huber's loss: 1 inside [-gamma, gamma], gamma/|e| outside.
Vector huber_reweight(const Vector& residuals, double gamma);

/// First-order time update: f(k, mean), F P F^T + Q with F the process
/// Jacobian at the previous mean.
GaussianBelief ekf_predict(const GaussianBelief& belief, const SystemModel& model, int k);

GaussianBelief ekf_step(const GaussianBelief& belief, const SystemModel& model, const Vector& y,
                        int k);

/// EKF time update followed by the Huber-reweighted regression update with
/// the measurement Jacobian as slope matrix.
FilterStepResult hekf_step(const GaussianBelief& belief, const SystemModel& model,
                           const HuberConfig& cfg, const Vector& y, int k,
                           const IterationObserver& observer = {});

/// Same pipeline as mcuf_step with Huber weights in place of the kernel.
FilterStepResult hukf_step(const GaussianBelief& belief, const SystemModel& model,
                           const UTConfig& ut_cfg, const HuberConfig& cfg, const Vector& y, int k,
                           const IterationObserver& observer = {});

}  // namespace mcuf
