#include "hbvm/bvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "hbvm/linalg.hpp"
#include "hbvm/parallel.hpp"

namespace hbvm {

Vector PosteriorGrid::mean() const {
  Vector m = Vector::Zero(grid.dim());
  for (long k = 0; k < grid.size(); ++k) m += density[k] * cell_volume * grid.node(k);
  return m;
}

double PosteriorGrid::mass_in_box(const Vector& lo, const Vector& hi) const {
  double mass = 0.0;
  for (long k = 0; k < grid.size(); ++k) {
    const Vector x = grid.node(k);
    bool in = true;
    for (int a = 0; a < grid.dim(); ++a)
      if (x[a] < lo[a] || x[a] > hi[a]) {
        in = false;
        break;
      }
    if (in) mass += density[k] * cell_volume;
  }
  return mass;
}

double gaussian_kl(const MomentPair& m0, const MomentPair& m1) {
  const int p = static_cast<int>(m0.mean.size());
  if (m1.mean.size() != p || m0.cov.rows() != p || m1.cov.rows() != p)
    throw DimensionError("gaussian_kl: dimension mismatch");
  CholeskyPD c0(m0.cov);
  CholeskyPD c1(m1.cov);
  const Vector dm = m1.mean - m0.mean;
  const double quad = dm.dot(c1.solve(dm));
  const double tr = c1.solve(m0.cov).trace();
  const double logdet = c0.log_det() - c1.log_det();
  return std::max(0.0, 0.5 * (quad + tr - p - logdet));
}

Vector kl_profile(const MomentModel& model, const Vector& theta0, const GridSpec& grid,
                  const std::vector<int>& indices) {
  if (indices.empty()) throw DimensionError("kl_profile: empty index set");
  std::vector<MomentPair> base;
  base.reserve(indices.size());
  for (int i : indices) base.push_back(model.moments(theta0, i));
  Vector out(grid.size());
  parallel_for(grid.size(), [&](long k) {
    const Vector theta = grid.node(k);
    double acc = 0.0;
    for (size_t j = 0; j < indices.size(); ++j)
      acc += gaussian_kl(base[j], model.moments(theta, indices[j]));
    out[k] = acc / static_cast<double>(indices.size());
  });
  return out;
}

long argmin_node(const Vector& values) {
  long best = 0;
  for (long k = 1; k < values.size(); ++k)
    if (values[k] < values[best]) best = k;
  return best;
}

Matrix bvm_precision_index(const MomentModel& model, const Vector& theta0, int index) {
  const int d = model.param_dim();
  const MomentPair mp = model.moments(theta0, index);
  CholeskyPD chol(mp.cov, index, theta0);
  const MomentDerivs dm = model.dmoments(theta0, index);
  std::vector<Matrix> a(d);
  std::vector<Vector> sdmu(d);
  for (int l = 0; l < d; ++l) {
    a[l] = chol.solve(dm.dcov[l]);
    sdmu[l] = chol.solve(dm.dmean[l]);
  }
  Matrix v(d, d);
  for (int l = 0; l < d; ++l)
    for (int k = 0; k < d; ++k)
      v(l, k) = 0.5 * (a[l] * a[k]).trace() + dm.dmean[l].dot(sdmu[k]);
  return 0.5 * (v + v.transpose());
}

PrecisionReport bvm_precision_avg(const MomentModel& model, const Vector& theta0,
                                  const std::vector<int>& indices) {
  if (indices.empty()) throw DimensionError("bvm_precision_avg: empty index set");
  const int d = model.param_dim();
  PrecisionReport rep;
  rep.v = Matrix::Zero(d, d);
  if (model.iid()) {
    rep.v = bvm_precision_index(model, theta0, indices.front());
  } else {
    std::vector<Matrix> per(indices.size());
    parallel_for(static_cast<long>(indices.size()),
                 [&](long j) { per[j] = bvm_precision_index(model, theta0, indices[j]); });
    for (const Matrix& m : per) rep.v += m;
    rep.v /= static_cast<double>(indices.size());
  }
  rep.min_eigenvalue = min_eigenvalue(rep.v);
  rep.positive_definite = rep.min_eigenvalue > 0;
  return rep;
}

Matrix hessian_kl_fd(const MomentModel& model, const Vector& theta0,
                     const std::vector<int>& indices, double h_scale) {
  const int d = model.param_dim();
  std::vector<MomentPair> base;
  base.reserve(indices.size());
  for (int i : indices) base.push_back(model.moments(theta0, i));
  auto avg_kl = [&](const Vector& theta) {
    double acc = 0.0;
    for (size_t j = 0; j < indices.size(); ++j)
      acc += gaussian_kl(base[j], model.moments(theta, indices[j]));
    if (!std::isfinite(acc)) throw NumericalError("hessian_kl_fd: non-finite KL value");
    return acc / static_cast<double>(indices.size());
  };
  Vector h(d);
  for (int l = 0; l < d; ++l) h[l] = h_scale * std::max(1.0, std::abs(theta0[l]));
  Matrix out(d, d);
  const double k0 = avg_kl(theta0);
  for (int l = 0; l < d; ++l) {
    Vector tp = theta0, tm = theta0;
    tp[l] += h[l];
    tm[l] -= h[l];
    out(l, l) = (avg_kl(tp) - 2.0 * k0 + avg_kl(tm)) / (h[l] * h[l]);
    for (int k = l + 1; k < d; ++k) {
      Vector tpp = theta0, tpm = theta0, tmp = theta0, tmm = theta0;
      tpp[l] += h[l]; tpp[k] += h[k];
      tpm[l] += h[l]; tpm[k] -= h[k];
      tmp[l] -= h[l]; tmp[k] += h[k];
      tmm[l] -= h[l]; tmm[k] -= h[k];
      out(l, k) = (avg_kl(tpp) - avg_kl(tpm) - avg_kl(tmp) + avg_kl(tmm)) / (4.0 * h[l] * h[k]);
      out(k, l) = out(l, k);
    }
  }
  return 0.5 * (out + out.transpose());
}

Vector center_tn(const MomentModel& model, const Vector& theta_star,
                 const ObservationBatch& batch) {
  std::vector<int> idx(batch.index.begin(), batch.index.end());
  const PrecisionReport rep = bvm_precision_avg(model, theta_star, idx);
  if (!(rep.min_eigenvalue > 1e-12)) {
    throw SingularPrecisionError(
        "center_tn: precision matrix singular, smallest eigenvalue = " +
            std::to_string(rep.min_eigenvalue),
        rep.min_eigenvalue);
  }
  const Vector score = surrogate_loglik_grad(model, theta_star, batch);
  CholeskyPD chol(rep.v);
  return theta_star + chol.solve(score) / static_cast<double>(batch.n());
}

BvmLimit bvm_limit(const MomentModel& model, const Vector& theta_star,
                   const ObservationBatch& batch) {
  BvmLimit lim;
  lim.theta_star = theta_star;
  lim.n_obs = batch.n();
  std::vector<int> idx(batch.index.begin(), batch.index.end());
  lim.v_per_index.reserve(model.iid() ? 1 : idx.size());
  if (model.iid()) {
    lim.v_per_index.push_back(bvm_precision_index(model, theta_star, idx.front()));
    lim.v = lim.v_per_index.front();
  } else {
    lim.v = Matrix::Zero(model.param_dim(), model.param_dim());
    for (int i : idx) {
      lim.v_per_index.push_back(bvm_precision_index(model, theta_star, i));
      lim.v += lim.v_per_index.back();
    }
    lim.v /= static_cast<double>(idx.size());
  }
  const double mineig = min_eigenvalue(lim.v);
  if (!(mineig > 1e-12))
    throw SingularPrecisionError(
        "bvm_limit: precision matrix singular, smallest eigenvalue = " + std::to_string(mineig),
        mineig);
  const Vector score = surrogate_loglik_grad(model, theta_star, batch);
  CholeskyPD chol(lim.v);
  lim.t_n = theta_star + chol.solve(score) / static_cast<double>(batch.n());
  return lim;
}

PosteriorGrid posterior_grid(const MomentModel& model, const ObservationBatch& batch,
                             const PriorSpec& prior, const GridSpec& grid) {
  batch.validate();
  PosteriorGrid pg;
  pg.grid = grid;
  pg.cell_volume = grid.cell_volume();
  pg.log_unnorm.resize(grid.size());

  // Group rows by model index so each node costs one factorization per group,
  // with the quadratic form evaluated through the sufficient statistics.
  std::vector<int> uniq;
  std::vector<long> group_n;
  std::vector<Vector> s1;
  std::vector<Matrix> s2;
  const int p = batch.p();
  for (int r = 0; r < batch.n(); ++r) {
    const int i = model.iid() ? batch.index.front() : batch.index[r];
    size_t g = 0;
    for (; g < uniq.size(); ++g)
      if (uniq[g] == i) break;
    if (g == uniq.size()) {
      uniq.push_back(i);
      group_n.push_back(0);
      s1.emplace_back(Vector::Zero(p));
      s2.emplace_back(Matrix::Zero(p, p));
    }
    const Vector x = batch.x.row(r).transpose();
    group_n[g] += 1;
    s1[g] += x;
    s2[g] += x * x.transpose();
  }
  const double log2pi = 1.8378770664093454835606594728112;
  parallel_for(grid.size(), [&](long k) {
    const Vector theta = grid.node(k);
    const double lp = prior.log_density(theta);
    if (!std::isfinite(lp)) {
      pg.log_unnorm[k] = -std::numeric_limits<double>::infinity();
      return;
    }
    double ll = 0.0;
    for (size_t g = 0; g < uniq.size(); ++g) {
      const MomentPair mp = model.moments(theta, uniq[g]);
      CholeskyPD chol(mp.cov, uniq[g], theta);
      const Matrix sinv = chol.inverse();
      const double n_g = static_cast<double>(group_n[g]);
      // sum_r (x_r - mu)' Sinv (x_r - mu) via trace identity
      const double quad = (sinv * s2[g]).trace() - 2.0 * mp.mean.dot(sinv * s1[g]) +
                          n_g * mp.mean.dot(sinv * mp.mean);
      ll += n_g * (-0.5 * p * log2pi - 0.5 * chol.log_det()) - 0.5 * quad;
    }
    pg.log_unnorm[k] = ll + lp;
  });

  const double shift = pg.log_unnorm.maxCoeff();
  if (!std::isfinite(shift))
    throw NumericalError("posterior_grid: zero posterior mass everywhere on the grid");
  double total = 0.0;
  pg.density.resize(grid.size());
  for (long k = 0; k < grid.size(); ++k) {
    pg.density[k] = std::exp(pg.log_unnorm[k] - shift);
    total += pg.density[k];
  }
  pg.density /= total * pg.cell_volume;
  return pg;
}

double l1_distance(const PosteriorGrid& pg, const BvmLimit& approx) {
  const int d = pg.grid.dim();
  if (approx.v.rows() != d) throw DimensionError("l1_distance: dimension mismatch");
  const Matrix prec = static_cast<double>(approx.n_obs) * approx.v;
  CholeskyPD chol(prec);
  // Gaussian log-density up to a constant; renormalized on the grid anyway.
  Vector logphi(pg.grid.size());
  for (long k = 0; k < pg.grid.size(); ++k) {
    const Vector dx = pg.grid.node(k) - approx.t_n;
    logphi[k] = -0.5 * dx.dot(prec * dx);
  }
  const double shift = logphi.maxCoeff();
  double total = 0.0;
  for (long k = 0; k < pg.grid.size(); ++k) total += std::exp(logphi[k] - shift);
  double dist = 0.0;
  for (long k = 0; k < pg.grid.size(); ++k) {
    const double phi = std::exp(logphi[k] - shift) / (total * pg.cell_volume);
    dist += std::abs(pg.density[k] - phi) * pg.cell_volume;
  }
  return dist;
}

double taylor_remainder_scalar(const MomentModel& model, const ObservationBatch& batch,
                               const Vector& theta, const Vector& theta_star, const Matrix& v) {
  const Vector delta = theta - theta_star;
  const double nrm2 = delta.squaredNorm();
  if (!(nrm2 > 0)) throw NumericalError("taylor_remainder_scalar: theta equals theta_star");
  const double n = static_cast<double>(batch.n());
  const double l_theta = surrogate_loglik(model, theta, batch);
  const double l_star = surrogate_loglik(model, theta_star, batch);
  const Vector grad = surrogate_loglik_grad(model, theta_star, batch);
  const double r = l_theta - l_star - grad.dot(delta) + 0.5 * n * delta.dot(v * delta);
  return r / (n * nrm2);
}

std::string bvm_limit_to_json(const BvmLimit& limit) {
  nlohmann::json j;
  j["theta_star"] = std::vector<double>(limit.theta_star.begin(), limit.theta_star.end());
  j["T_N"] = std::vector<double>(limit.t_n.begin(), limit.t_n.end());
  std::vector<double> v_rm, vi_rm;
  const Matrix vinv = limit.v.inverse();
  for (int r = 0; r < limit.v.rows(); ++r)
    for (int c = 0; c < limit.v.cols(); ++c) {
      v_rm.push_back(limit.v(r, c));
      vi_rm.push_back(vinv(r, c));
    }
  j["V"] = v_rm;
  j["V_inverse"] = vi_rm;
  j["per_index_count"] = limit.v_per_index.size();
  j["n_obs"] = limit.n_obs;
  return j.dump(2);
}

}  // namespace hbvm
