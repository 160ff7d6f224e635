#ifndef HBVM_SQUARE_INTEGRAL_HPP
#define HBVM_SQUARE_INTEGRAL_HPP

#include <vector>

#include "hbvm/model.hpp"
#include "hbvm/random.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

// a_{j,k} = sqrt(2j+1) (-1)^{j+k} C(j,k) C(j+k,k).
double legendre_coeff(int j, int k);

// Normalized Legendre polynomials on [0, z]:
// e_j(x) = sum_k a_{j,k} z^{-k-1/2} x^k.
class LegendreBasis {
 public:
  LegendreBasis(int max_order, double length);
  int max_order() const { return max_order_; }
  double length() const { return length_; }
  double coeff(int j, int k) const;
  double eval(int j, double x) const;

 private:
  int max_order_;
  double length_;
  std::vector<std::vector<double>> a_;
};

// Closed-form surrogate mean (z^{5/2}/6 + z^{3/2} th^2/2, ...), p = 3.
Vector mean_mu(double theta, double z);
Vector dmean_mu_dtheta(double theta, double z);

// Covariance-series coefficients of the z^5 and theta^2 z^4 terms.
double cov_coeff_b(int k, int l);
double cov_coeff_c(int k, int l);

// Sigma_{j1,j2} = Lambda_{j1,j2} + sum_{l<=j1} sum_{k<=j2} a_{j1,l} a_{j2,k}
//                 (z^5 b_{k,l} + theta^2 z^4 c_{k,l}).
Matrix covariance_sigma(double theta, double z, const Matrix& lambda);
Matrix dcovariance_sigma_dtheta(double theta, double z);

// Brownian path on the uniform grid of [0, z], n_steps+1 values, B(0) = 0.
std::vector<double> simulate_bm_path(double z, int n_steps, Rng& rng);

// t -> int_0^t (f(s) - theta)^2 ds by cumulative trapezoid, on the path grid.
std::vector<double> forward_map(const std::vector<double>& path, double z, double theta);

// Same, subsampled onto a coarser uniform grid of out_points values whose
// spacing must be a multiple of the path spacing.
std::vector<double> forward_map_on(const std::vector<double>& path, double z, double theta,
                                   int out_points);

// Trapezoid quadrature of values * e_j over [0, z]; values on a uniform grid.
double project_legendre(const std::vector<double>& values, const LegendreBasis& basis, int j);

// First n_coords Legendre coefficients of the forward map of one path.
Vector eta_square_integral(const std::vector<double>& path, double z, double theta,
                           int n_coords = 3);

// Sample mean/covariance of eta over fresh Brownian paths with jackknife
// standard errors (blocks of paths).
struct MomentEstimate {
  MomentPair value;
  Vector mean_se;
  Matrix cov_se;
  long n_samples = 0;
};
MomentEstimate mc_moments_oracle(double theta, double z, int n_paths, int n_steps,
                                 const RandomStream& stream, int n_blocks = 100);

// d = 1, p = 3 surrogate model with analytic derivatives.
class SquareIntModel : public MomentModel {
 public:
  SquareIntModel(std::vector<double> z_seq, Matrix lambda);
  int param_dim() const override { return 1; }
  int obs_dim() const override { return 3; }
  MomentPair moments(const Vector& theta, int index) const override;
  MomentDerivs dmoments(const Vector& theta, int index) const override;
  bool iid() const override { return iid_; }
  double z_at(int index) const;
  const Matrix& lambda() const { return lambda_; }

 private:
  std::vector<double> z_seq_;
  Matrix lambda_;
  bool iid_;
};

// Data generator: eta from a fresh Brownian path plus N(0, Lambda) noise.
class SquareIntGenerator : public HierarchicalGenerator {
 public:
  SquareIntGenerator(std::vector<double> z_seq, Matrix lambda, int n_steps = 1000);
  int obs_dim() const override { return 3; }
  Vector latent_eta(const Vector& theta0, int index, Rng& rng) const override;
  const Matrix& noise_cov(int index) const override;

 private:
  std::vector<double> z_seq_;
  Matrix lambda_;
  int n_steps_;
};

}  // namespace hbvm

#endif
