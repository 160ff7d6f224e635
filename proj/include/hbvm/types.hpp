#ifndef HBVM_TYPES_HPP
#define HBVM_TYPES_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace hbvm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Covariance failed the SPD factorization. Carries the observation index the
// failure occurred at (-1 when not tied to a batch) and the parameter value.
class NotPositiveDefiniteError : public NumericalError {
 public:
  NotPositiveDefiniteError(const std::string& what, int index, const Vector& theta)
      : NumericalError(what), index_(index), theta_(theta) {}
  int index() const { return index_; }
  const Vector& theta() const { return theta_; }

 private:
  int index_;
  Vector theta_;
};

class SingularPrecisionError : public NumericalError {
 public:
  SingularPrecisionError(const std::string& what, double min_eigenvalue)
      : NumericalError(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class StepCapError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Surrogate mean and covariance for one observation index.
struct MomentPair {
  Vector mean;
  Matrix cov;
};

// First theta-derivatives of the surrogate moments, one entry per component.
struct MomentDerivs {
  std::vector<Vector> dmean;
  std::vector<Matrix> dcov;
};

// Scalar Monte Carlo estimate with standard error.
struct McScalar {
  double value = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
};

struct McVector {
  Vector value;
  Vector std_error;
  long n_samples = 0;
};

struct McMatrix {
  Matrix value;
  Matrix std_error;
  long n_samples = 0;
};

}  // namespace hbvm

#endif
