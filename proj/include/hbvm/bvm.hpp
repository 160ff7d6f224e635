#ifndef HBVM_BVM_HPP
#define HBVM_BVM_HPP

#include <string>
#include <vector>

#include "hbvm/grid.hpp"
#include "hbvm/model.hpp"
#include "hbvm/prior.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

// Discretized posterior over a lattice; sum(density) * cell_volume == 1.
struct PosteriorGrid {
  GridSpec grid;
  Vector log_unnorm;
  Vector density;
  double cell_volume = 0.0;

  Vector mean() const;
  // Posterior mass of the box [lo, hi] (nodes inside, Riemann weights).
  double mass_in_box(const Vector& lo, const Vector& hi) const;
};

// Gaussian limit N(T_N, (n_obs * V)^{-1}).
struct BvmLimit {
  Vector theta_star;
  Matrix v;
  std::vector<Matrix> v_per_index;
  Vector t_n;
  long n_obs = 0;
};

struct PrecisionReport {
  Matrix v;
  double min_eigenvalue = 0.0;
  bool positive_definite = false;
};

// KL( N(m0) || N(m1) ).
double gaussian_kl(const MomentPair& m0, const MomentPair& m1);

// Node-wise average over `indices` of KL(moments(theta0,i) || moments(theta,i)).
Vector kl_profile(const MomentModel& model, const Vector& theta0, const GridSpec& grid,
                  const std::vector<int>& indices);

// Flat index of the profile minimum, lowest index on ties.
long argmin_node(const Vector& values);

// Per-index precision V^(i): 0.5 tr(A_l A_k) + dmu_l' Sigma^{-1} dmu_k,
// A_l = Sigma^{-1} dSigma_l, everything at theta0.
Matrix bvm_precision_index(const MomentModel& model, const Vector& theta0, int index);

PrecisionReport bvm_precision_avg(const MomentModel& model, const Vector& theta0,
                                  const std::vector<int>& indices);

// Central second differences of the average-KL map at theta0; the independent
// oracle for bvm_precision_*. Step h_scale * max(1, |theta0_l|) per axis.
Matrix hessian_kl_fd(const MomentModel& model, const Vector& theta0,
                     const std::vector<int>& indices, double h_scale = 1e-3);

// T_N = theta_star + (1/N) V^{-1} grad l(theta_star), V averaged over the batch.
Vector center_tn(const MomentModel& model, const Vector& theta_star,
                 const ObservationBatch& batch);

// Assembles theta_star, V (with per-index list), and T_N for one batch.
BvmLimit bvm_limit(const MomentModel& model, const Vector& theta_star,
                   const ObservationBatch& batch);

PosteriorGrid posterior_grid(const MomentModel& model, const ObservationBatch& batch,
                             const PriorSpec& prior, const GridSpec& grid);

// L1 distance between the grid posterior and the Gaussian limit density
// tabulated and renormalized on the same grid. In [0, 2].
double l1_distance(const PosteriorGrid& pg, const BvmLimit& approx);

// Normalized quadratic-expansion residual at theta:
// [l(theta) - l(theta*) - grad'Delta + N/2 Delta'V Delta] / (N |Delta|^2).
double taylor_remainder_scalar(const MomentModel& model, const ObservationBatch& batch,
                               const Vector& theta, const Vector& theta_star, const Matrix& v);

std::string bvm_limit_to_json(const BvmLimit& limit);

}  // namespace hbvm

#endif
