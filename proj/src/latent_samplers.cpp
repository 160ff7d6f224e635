#include "hbvm/latent_samplers.hpp"

#include <cmath>

namespace hbvm {

SquareIntLatentSampler::SquareIntLatentSampler(double z, Matrix lambda, int n_steps, int p)
    : z_(z), lambda_(std::move(lambda)), n_steps_(n_steps), p_(p) {
  if (p < 1 || p > 3) throw DimensionError("SquareIntLatentSampler: p must be in 1..3");
  if (lambda_.rows() != p || lambda_.cols() != p)
    throw DimensionError("SquareIntLatentSampler: Lambda must be p x p");
}

LatentDraw SquareIntLatentSampler::draw(const Vector& theta, Rng& rng) const {
  const std::vector<double> path = simulate_bm_path(z_, n_steps_, rng);
  const double th = theta[0];
  const int n = n_steps_;
  const double h = z_ / n;
  // cumulative trapezoid of (f - th)^2 and of -2 (f - th)
  std::vector<double> t(n + 1), dt(n + 1);
  t[0] = dt[0] = 0.0;
  double prev = (path[0] - th) * (path[0] - th);
  double dprev = -2.0 * (path[0] - th);
  for (int i = 1; i <= n; ++i) {
    const double cur = (path[i] - th) * (path[i] - th);
    const double dcur = -2.0 * (path[i] - th);
    t[i] = t[i - 1] + 0.5 * h * (prev + cur);
    dt[i] = dt[i - 1] + 0.5 * h * (dprev + dcur);
    prev = cur;
    dprev = dcur;
  }
  const LegendreBasis basis(p_ - 1, z_);
  LatentDraw out;
  out.eta.resize(p_);
  out.deta.resize(p_, 1);
  for (int j = 0; j < p_; ++j) {
    out.eta[j] = project_legendre(t, basis, j);
    out.deta(j, 0) = project_legendre(dt, basis, j);
  }
  return out;
}

SchrodingerLatentSampler::SchrodingerLatentSampler(SchrodingerSettings settings, Matrix lambda)
    : settings_(settings), lambda_(std::move(lambda)), basis_(settings.basis_order) {
  if (lambda_.rows() != settings_.p || lambda_.cols() != settings_.p)
    throw DimensionError("SchrodingerLatentSampler: Lambda must be p x p");
}

LatentDraw SchrodingerLatentSampler::draw(const Vector& theta, Rng& rng) const {
  const RandomStream s{rng.next_u64(), rng.next_u64()};
  const Field2D field = sample_field(s.substream(0), settings_.grid_n);
  const EtaEstimate est = eta_and_grad(field, boundary_, theta, basis_, settings_.p,
                                       settings_.quad_grid, settings_.fk(), s.substream(1));
  return {est.eta, est.deta};
}

}  // namespace hbvm
