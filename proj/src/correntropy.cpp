#include "mcuf/correntropy.hpp"

#include <cmath>
#include <string>

namespace mcuf {

KernelBandwidth::KernelBandwidth(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("kernel bandwidth must be positive and finite, got " +
                          std::to_string(sigma));
  }
}

double gaussian_kernel(double e, KernelBandwidth sigma) {
  const double s = sigma.value();
  return std::exp(-(e * e) / (2.0 * s * s));
}

double sample_correntropy(std::span<const double> x, std::span<const double> y,
                          KernelBandwidth sigma) {
  if (x.size() != y.size()) {
    throw LengthMismatch("sample_correntropy: sequences differ in length");
  }
  if (x.empty()) {
    throw EmptyInput("sample_correntropy: no samples");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += gaussian_kernel(x[i] - y[i], sigma);
  }
  return acc / static_cast<double>(x.size());
}

double mcc_cost(const Vector& residuals, KernelBandwidth sigma) {
  if (residuals.size() == 0) {
    throw EmptyInput("mcc_cost: empty residual vector");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    acc += gaussian_kernel(residuals[i], sigma);
  }
  return acc;
}

}  // namespace mcuf
