#ifndef HBVM_FISHER_HPP
#define HBVM_FISHER_HPP

#include <utility>

#include "hbvm/random.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

struct FisherSettings {
  long n_outer = 10000;
  long n_inner = 10000;
  bool shared_inner = true;  // one inner latent sample reused across outer draws
  int jackknife_blocks = 100;
  // fraction of dropped outer draws (inner average underflowed) that raises
  // an error
  double max_drop_fraction = 0.01;
};

// One latent draw evaluated through the forward map: eta_theta(f) and its
// theta-Jacobian.
struct LatentDraw {
  Vector eta;   // p
  Matrix deta;  // p x d
};

// Model adapter for the nested estimator: fresh latent draws and the noise
// covariance of the observation layer.
class LatentForwardSampler {
 public:
  virtual ~LatentForwardSampler() = default;
  virtual int obs_dim() const = 0;
  virtual int param_dim() const = 0;
  virtual LatentDraw draw(const Vector& theta, Rng& rng) const = 0;
  virtual const Matrix& noise_cov() const = 0;
};

// Conditional Gaussian density p_{theta,f}(x) = N(x; eta_theta(f), Lambda)
// and its theta-gradient p * deta' Lambda^{-1} (x - eta).
std::pair<double, Vector> conditional_density_and_dtheta(const Vector& x, const LatentDraw& f,
                                                         const Matrix& lambda);

struct FisherEstimate {
  Matrix value;      // d x d
  Matrix std_error;  // per-entry jackknife SE over outer blocks
  long n_outer = 0;
  long n_inner = 0;
  long n_dropped = 0;
};

// Nested Monte Carlo estimate of E[ s(X) s(X)' ] with
// s(X) = (sum_k dp_k(X)) / (sum_k p_k(X)) over n_inner latent draws, outer
// average over n_outer fresh X from the true model. Inner averages run in the
// log domain (max-shift); an outer draw whose shifted inner sum is still not
// finite is dropped and counted.
FisherEstimate true_fisher_mc(const LatentForwardSampler& sampler, const Vector& theta0,
                              const FisherSettings& settings, const RandomStream& stream);

}  // namespace hbvm

#endif
