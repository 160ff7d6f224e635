#ifndef HBVM_SCHRODINGER_HPP
#define HBVM_SCHRODINGER_HPP

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "hbvm/model.hpp"
#include "hbvm/random.hpp"
#include "hbvm/square_integral.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

// Positive scalar field on [0,1]^2 sampled on an n x n grid, bilinear between
// nodes.
struct Field2D {
  int n = 0;
  Matrix values;  // values(i, j) at (i/(n-1), j/(n-1))

  double operator()(double x, double y) const;
};

// f(x,y) = exp(2 B1(x) + 3 B2(y)) with independent Brownian motions B1, B2.
Field2D sample_field(const RandomStream& stream, int grid_n);
Field2D constant_field(int grid_n, double value);

// theta-parametrized Dirichlet boundary data on the unit square.
class BoundaryCondition {
 public:
  virtual ~BoundaryCondition() = default;
  virtual double value(const Vector& theta, double x, double y) const = 0;
  virtual Vector theta_grad(const Vector& theta, double x, double y) const = 0;
};

// g_theta(x, y) = (x - 1/2)^2 + theta^2 y.
class QuadraticRampBoundary : public BoundaryCondition {
 public:
  double value(const Vector& theta, double x, double y) const override {
    return (x - 0.5) * (x - 0.5) + theta[0] * theta[0] * y;
  }
  Vector theta_grad(const Vector& theta, double x, double y) const override {
    Vector g(1);
    g[0] = 2.0 * theta[0] * y;
    (void)x;
    return g;
  }
};

// Products e_i(x) e_j(y) of normalized Legendre polynomials on [0,1],
// 0 <= i, j <= order, enumerated row-major in (i, j).
class TensorLegendreBasis {
 public:
  explicit TensorLegendreBasis(int order = 3);
  int order() const { return order_; }
  int size() const { return (order_ + 1) * (order_ + 1); }
  double eval(int k, double x, double y) const;

 private:
  int order_;
  LegendreBasis leg_;
};

struct FkSettings {
  int n_paths = 2000;
  double dt = 1e-4;
  long step_cap = 10000000;
};

// Feynman-Kac value of the Dirichlet problem (1/2) Lap u - f u = 0 at x0:
// average of g_theta(exit point) * exp(-int_0^tau f) over Brownian paths.
McScalar fk_solution_at(const Eigen::Vector2d& x0, const Field2D& field,
                        const BoundaryCondition& g, const Vector& theta, const FkSettings& fk,
                        const RandomStream& stream);

// Same paths, payoff g and its theta-gradient together (common random
// numbers: paths do not depend on theta).
struct FkNodeEstimate {
  double u = 0.0;
  Vector du;
  double u_se = 0.0;
  long n_samples = 0;
};
FkNodeEstimate fk_value_and_grad(const Eigen::Vector2d& x0, const Field2D& field,
                                 const BoundaryCondition& g, const Vector& theta,
                                 const FkSettings& fk, const RandomStream& stream, int d);

// u and du/dtheta projected onto the first p tensor-basis elements; u on the
// (quad_m+2)^2 lattice (interior by Feynman-Kac, boundary exact), 2-D
// trapezoid quadrature.
struct EtaEstimate {
  Vector eta;   // p
  Matrix deta;  // p x d
};
EtaEstimate eta_and_grad(const Field2D& field, const BoundaryCondition& g, const Vector& theta,
                         const TensorLegendreBasis& basis, int p, int quad_m,
                         const FkSettings& fk, const RandomStream& stream);

Vector eta_coeffs(const Field2D& field, const BoundaryCondition& g, const Vector& theta,
                  const TensorLegendreBasis& basis, int p, int quad_m, const FkSettings& fk,
                  const RandomStream& stream);

struct SchrodingerSettings {
  int grid_n = 100;      // field grid
  double dt = 1e-4;
  int paths_per_node = 2000;
  int quad_grid = 21;    // interior quadrature nodes per axis
  int n_fields = 100;
  int p = 1;
  double lambda_scale = 0.01;
  int basis_order = 3;
  long step_cap = 10000000;

  FkSettings fk() const { return {paths_per_node, dt, step_cap}; }
  Matrix lambda() const { return lambda_scale * Matrix::Identity(p, p); }
};

// X_i = eta(f_i) + gamma_i with fresh fields; the eta pipeline matches the
// moment model (same discretization), so surrogate moments estimated at the
// same settings are consistent with the data law.
ObservationBatch sample_data_schrodinger(const Vector& theta0, int n,
                                         const SchrodingerSettings& settings,
                                         const RandomStream& stream);

// i.i.d. MC-moment model: mu/Sigma from n_fields field draws with common
// random numbers across theta (paths and fields fixed by the stream), so the
// moment maps are smooth in theta and the pathwise derivatives are exact.
class SchrodingerMomentModel : public MomentModel {
 public:
  SchrodingerMomentModel(SchrodingerSettings settings, const RandomStream& stream,
                         std::shared_ptr<const BoundaryCondition> boundary = nullptr);
  int param_dim() const override { return 1; }
  int obs_dim() const override { return settings_.p; }
  MomentPair moments(const Vector& theta, int index) const override;
  MomentDerivs dmoments(const Vector& theta, int index) const override;
  bool iid() const override { return true; }
  const SchrodingerSettings& settings() const { return settings_; }
  // Per-field eta estimates backing the cached moments at theta.
  const std::vector<EtaEstimate>& field_etas(const Vector& theta) const;

 private:
  struct Cached {
    std::vector<EtaEstimate> etas;
    MomentPair mp;
    MomentDerivs dm;
  };
  const Cached& eval(const Vector& theta) const;

  SchrodingerSettings settings_;
  RandomStream stream_;
  std::shared_ptr<const BoundaryCondition> boundary_;
  std::vector<Field2D> fields_;
  TensorLegendreBasis basis_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<double>, std::shared_ptr<const Cached>> cache_;
};

}  // namespace hbvm

#endif
