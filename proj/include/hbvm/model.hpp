#ifndef HBVM_MODEL_HPP
#define HBVM_MODEL_HPP

#include <functional>
#include <vector>

#include "hbvm/random.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

// N observations of dimension p. `index[r]` is the model index i for row r,
// supporting non-i.i.d. sequences (z_i, t_i).
struct ObservationBatch {
  Matrix x;                // N x p
  std::vector<int> index;  // model index per row

  int n() const { return static_cast<int>(x.rows()); }
  int p() const { return static_cast<int>(x.cols()); }
  void validate() const;
};

// Surrogate model interface: per-index Gaussian moments and their first
// theta-derivatives. The default dmoments() falls back to central differences
// with step 1e-5 * max(1, |theta_l|); analytic models override it.
class MomentModel {
 public:
  virtual ~MomentModel() = default;
  virtual int param_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual MomentPair moments(const Vector& theta, int index) const = 0;
  virtual MomentDerivs dmoments(const Vector& theta, int index) const;
  // True when moments do not depend on the index.
  virtual bool iid() const { return false; }
};

// Central-difference derivatives of the moment maps, step h_scale * max(1,|theta_l|).
// Also the oracle that analytic dmoments implementations are tested against.
MomentDerivs finite_diff_dmoments(const MomentModel& model, const Vector& theta, int index,
                                  double h_scale = 1e-5);

// Sum over the batch of log N_p(x_i; mu_theta^(i), Sigma_theta^(i)).
double surrogate_loglik(const MomentModel& model, const Vector& theta,
                        const ObservationBatch& batch);

// Gradient of surrogate_loglik via the Gaussian chain rule.
Vector surrogate_loglik_grad(const MomentModel& model, const Vector& theta,
                             const ObservationBatch& batch);

// Central finite differences of surrogate_loglik, step 1e-5 * max(1, |theta_l|).
Vector surrogate_loglik_grad_fd(const MomentModel& model, const Vector& theta,
                                const ObservationBatch& batch, double h_scale = 1e-5);

// (x, vec(x x^T)) with row-major vec ordering.
Vector exp_family_stats(const Vector& x);

// Model-specific data generator: eta(f_i) for a fresh latent draw plus the
// noise covariance. Lambda may be singular here (generation only).
class HierarchicalGenerator {
 public:
  virtual ~HierarchicalGenerator() = default;
  virtual int obs_dim() const = 0;
  virtual Vector latent_eta(const Vector& theta0, int index, Rng& rng) const = 0;
  virtual const Matrix& noise_cov(int index) const = 0;
};

// N draws of eta(f_i) + gamma_i; deterministic given the stream, independent
// of worker count (row i uses substream i).
ObservationBatch sample_observations(const HierarchicalGenerator& gen, const Vector& theta0,
                                     int n, const RandomStream& stream);

}  // namespace hbvm

#endif
