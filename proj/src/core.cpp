#include "mcuf/core.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace mcuf {

namespace {

constexpr int kMaxJitterDoublings = 8;
constexpr double kJitterScale = 1e-12;

}  // namespace

Vector CholeskyFactor::solve(const Vector& b) const {
  const auto l = lower.triangularView<Eigen::Lower>();
  return l.transpose().solve(l.solve(b));
}

Matrix CholeskyFactor::solve(const Matrix& b) const {
  const auto l = lower.triangularView<Eigen::Lower>();
  return l.transpose().solve(l.solve(b));
}

Matrix CholeskyFactor::solve_lower(const Matrix& b) const {
  return lower.triangularView<Eigen::Lower>().solve(b);
}

Vector CholeskyFactor::solve_lower(const Vector& b) const {
  return lower.triangularView<Eigen::Lower>().solve(b);
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch(std::string(what) + " must be square, got " +
                            std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()));
  }
}

Matrix symmetrize(const Matrix& a) {
  require_square(a, "symmetrize input");
  return 0.5 * (a + a.transpose());
}

CholeskyFactor cholesky(const Matrix& a) {
  require_square(a, "cholesky input");
  if (a.size() == 0) {
    throw DimensionMismatch("cholesky input is empty");
  }
  if (!a.allFinite()) {
    throw NotPositiveDefinite("cholesky input has non-finite entries");
  }
  const Matrix sym = symmetrize(a);

  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    return CholeskyFactor{llt.matrixL(), 0.0};
  }

  const auto n = static_cast<double>(sym.rows());
  const double mean_diag = sym.trace() / n;
  // A zero (or negative-trace) matrix has no natural scale; fall back to 1.
  double delta = kJitterScale * (mean_diag > 0.0 ? mean_diag : 1.0);
  for (int i = 0; i <= kMaxJitterDoublings; ++i, delta *= 2.0) {
    Matrix shifted = sym;
    shifted.diagonal().array() += delta;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      return CholeskyFactor{llt.matrixL(), delta};
    }
  }
  throw NotPositiveDefinite("cholesky failed after jitter up to " +
                            std::to_string(delta / 2.0));
}

bool is_symmetric_psd(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols() || !a.allFinite()) return false;
  if (a.size() == 0) return true;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > rel_tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(a), Eigen::EigenvaluesOnly);
  const Vector& ev = eig.eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -rel_tol * norm;
}

void SystemModel::validate() const {
  if (n < 1 || m < 1) {
    throw InvalidArgument("system dimensions must be positive");
  }
  if (!f || !h) {
    throw InvalidArgument("system model needs both process and measurement maps");
  }
  if (Q.rows() != n || Q.cols() != n) {
    throw DimensionMismatch("Q must be n x n");
  }
  if (R.rows() != m || R.cols() != m) {
    throw DimensionMismatch("R must be m x m");
  }
  if (!is_symmetric_psd(Q)) {
    throw NotPositiveDefinite("Q must be symmetric positive semidefinite");
  }
  Eigen::LLT<Matrix> llt(symmetrize(R));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("R must be strictly positive definite");
  }
}

}  // namespace mcuf
