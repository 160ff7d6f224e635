#ifndef HBVM_LATENT_SAMPLERS_HPP
#define HBVM_LATENT_SAMPLERS_HPP

#include <memory>

#include "hbvm/fisher.hpp"
#include "hbvm/schrodinger.hpp"
#include "hbvm/square_integral.hpp"

namespace hbvm {

// Square-integral forward map: eta from a fresh Brownian path, the
// theta-derivative differentiated under the integral
// (d/dtheta (f - theta)^2 = -2 (f - theta)) on the same path.
class SquareIntLatentSampler : public LatentForwardSampler {
 public:
  SquareIntLatentSampler(double z, Matrix lambda, int n_steps, int p = 1);
  int obs_dim() const override { return p_; }
  int param_dim() const override { return 1; }
  LatentDraw draw(const Vector& theta, Rng& rng) const override;
  const Matrix& noise_cov() const override { return lambda_; }

 private:
  double z_;
  Matrix lambda_;  // p x p
  int n_steps_;
  int p_;
};

// Schrodinger forward map: eta from a fresh field via Feynman-Kac, the
// theta-derivative from the boundary payoff gradient on shared paths.
class SchrodingerLatentSampler : public LatentForwardSampler {
 public:
  SchrodingerLatentSampler(SchrodingerSettings settings, Matrix lambda);
  int obs_dim() const override { return settings_.p; }
  int param_dim() const override { return 1; }
  LatentDraw draw(const Vector& theta, Rng& rng) const override;
  const Matrix& noise_cov() const override { return lambda_; }

 private:
  SchrodingerSettings settings_;
  Matrix lambda_;
  QuadraticRampBoundary boundary_;
  TensorLegendreBasis basis_;
};

}  // namespace hbvm

#endif
