#pragma once

#include <span>

#include "mcuf/core.hpp"

namespace mcuf {

/// Gaussian kernel width, in units of the (whitened) error it is applied to.
class KernelBandwidth {
 public:
  explicit KernelBandwidth(double sigma);
  double value() const { return sigma_; }

 private:
  double sigma_;
};

/// exp(-e^2 / (2 sigma^2)). Not clamped: underflows to 0 for huge |e|/sigma.
double gaussian_kernel(double e, KernelBandwidth sigma);

/// Sample-mean correntropy estimate (1/N) sum G(x_i - y_i).
double sample_correntropy(std::span<const double> x, std::span<const double> y,
                          KernelBandwidth sigma);

/// Sum of kernel evaluations over a residual vector; maximal (= size) iff
/// every residual is zero.
double mcc_cost(const Vector& residuals, KernelBandwidth sigma);

}  // namespace mcuf
