#ifndef HBVM_LINALG_HPP
#define HBVM_LINALG_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hbvm/types.hpp"

namespace hbvm {

// Smallest accepted Cholesky pivot (squared diagonal entry of L).
inline constexpr double kCholPivotMin = 1e-12;

// SPD factorization wrapper. Fails when the matrix is not symmetric positive
// definite at the pivot threshold; provides log-determinant and solves so
// callers never form explicit determinants or inverses of large products.
class CholeskyPD {
 public:
  explicit CholeskyPD(const Matrix& a, int index = -1, const Vector& theta = Vector()) {
    if (a.rows() != a.cols()) throw DimensionError("CholeskyPD: matrix not square");
    llt_.compute(a);
    bool ok = llt_.info() == Eigen::Success;
    if (ok) {
      const auto& l = llt_.matrixLLT();
      for (int i = 0; i < a.rows(); ++i) {
        if (!(l(i, i) * l(i, i) > kCholPivotMin)) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      std::string msg = "covariance not positive definite (pivot <= 1e-12)";
      if (index >= 0) msg += " at observation index " + std::to_string(index);
      if (theta.size() > 0) {
        msg += ", theta = [";
        for (int i = 0; i < theta.size(); ++i) msg += (i ? ", " : "") + std::to_string(theta[i]);
        msg += "]";
      }
      throw NotPositiveDefiniteError(msg, index, theta);
    }
  }

  double log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  Vector solve(const Vector& b) const { return llt_.solve(b); }
  Matrix solve(const Matrix& b) const { return llt_.solve(b); }

  Matrix inverse() const {
    const long n = llt_.matrixLLT().rows();
    const Matrix id = Matrix::Identity(n, n);
    return llt_.solve(id);
  }

 private:
  Eigen::LLT<Matrix> llt_;
};

// Symmetric PSD square root, used only for data generation where degenerate
// noise covariances are allowed.
inline Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw NumericalError("psd_sqrt: eigensolver failed");
  Vector ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-10) throw NumericalError("psd_sqrt: matrix has negative eigenvalue");
    ev[i] = ev[i] > 0 ? std::sqrt(ev[i]) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  return es.eigenvalues().minCoeff();
}

}  // namespace hbvm

#endif
