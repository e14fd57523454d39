#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mcuf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Error hierarchy. Everything the library throws derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyInput : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidScaling : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Raised by the fixed-point solvers when the iteration cap is hit while the
/// relative step is still above 1.
class Diverged : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Mean and covariance carried by every filter between steps.
struct GaussianBelief {
  Vector mean;
  Matrix covariance;

  Eigen::Index dim() const { return mean.size(); }
};

/// Lower-triangular L with A = L * L^T.
struct CholeskyFactor {
  Matrix lower;
  /// Diagonal shift that was added to A before factorization succeeded.
  double jitter = 0.0;

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  /// L^{-1} * b
  Matrix solve_lower(const Matrix& b) const;
  Vector solve_lower(const Vector& b) const;
};

using ProcessMap = std::function<Vector(int step, const Vector& state)>;
using MeasurementMap = std::function<Vector(int step, const Vector& state)>;
using JacobianMap = std::function<Matrix(int step, const Vector& state)>;

/// Discrete-time system x(k) = f(k, x(k-1)) + q, y(k) = h(k, x(k)) + r.
///
/// The step passed to `f` is the index of the state being produced, so a
/// filter at step k calls f(k, x(k-1|k-1)) and h(k, x(k|k-1)).
/// `jacobian_f` / `jacobian_h` are only needed by the EKF family and may be
/// left empty.
struct SystemModel {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  ProcessMap f;
  MeasurementMap h;
  Matrix Q;
  Matrix R;
  JacobianMap jacobian_f;
  JacobianMap jacobian_h;

  bool has_jacobians() const { return bool(jacobian_f) && bool(jacobian_h); }
  /// Throws DimensionMismatch / InvalidArgument / NotPositiveDefinite.
  void validate() const;
};

/// Factorizes a symmetric matrix. On failure a diagonal shift starting at
/// 1e-12 * trace(A)/n is added and doubled up to 8 times.
CholeskyFactor cholesky(const Matrix& a);

Matrix symmetrize(const Matrix& a);

/// True when `a` is symmetric to `rel_tol` (relative to its largest entry)
/// and its smallest eigenvalue is >= -rel_tol * ||a||.
bool is_symmetric_psd(const Matrix& a, double rel_tol = 1e-10);

void require_square(const Matrix& a, const char* what);

}  // namespace mcuf
