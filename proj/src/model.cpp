#include "hbvm/model.hpp"

#include <cmath>
#include <map>

#include "hbvm/linalg.hpp"
#include "hbvm/parallel.hpp"

namespace hbvm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

void ObservationBatch::validate() const {
  if (x.rows() < 1) throw DimensionError("ObservationBatch: need at least one observation");
  if (static_cast<long>(index.size()) != x.rows())
    throw DimensionError("ObservationBatch: index size does not match row count");
  if (!x.allFinite()) throw NumericalError("ObservationBatch: non-finite entries");
}

MomentDerivs MomentModel::dmoments(const Vector& theta, int index) const {
  return finite_diff_dmoments(*this, theta, index);
}

MomentDerivs finite_diff_dmoments(const MomentModel& model, const Vector& theta, int index,
                                  double h_scale) {
  const int d = model.param_dim();
  MomentDerivs out;
  out.dmean.resize(d);
  out.dcov.resize(d);
  for (int l = 0; l < d; ++l) {
    const double h = h_scale * std::max(1.0, std::abs(theta[l]));
    Vector tp = theta, tm = theta;
    tp[l] += h;
    tm[l] -= h;
    const MomentPair mp = model.moments(tp, index);
    const MomentPair mm = model.moments(tm, index);
    out.dmean[l] = (mp.mean - mm.mean) / (2.0 * h);
    out.dcov[l] = (mp.cov - mm.cov) / (2.0 * h);
  }
  return out;
}

namespace {

// Per-unique-index factorization shared across rows of a batch.
struct IndexedMoments {
  MomentPair mp;
  CholeskyPD chol;
  IndexedMoments(const MomentModel& model, const Vector& theta, int i)
      : mp(model.moments(theta, i)), chol(mp.cov, i, theta) {}
};

}  // namespace

double surrogate_loglik(const MomentModel& model, const Vector& theta,
                        const ObservationBatch& batch) {
  batch.validate();
  const int p = model.obs_dim();
  if (batch.p() != p) throw DimensionError("surrogate_loglik: observation dimension mismatch");
  std::map<int, IndexedMoments> cache;
  double ll = 0.0;
  for (int r = 0; r < batch.n(); ++r) {
    const int i = model.iid() ? batch.index.front() : batch.index[r];
    auto it = cache.find(i);
    if (it == cache.end()) it = cache.emplace(i, IndexedMoments(model, theta, i)).first;
    const Vector res = batch.x.row(r).transpose() - it->second.mp.mean;
    const Vector w = it->second.chol.solve(res);
    ll += -0.5 * p * kLog2Pi - 0.5 * it->second.chol.log_det() - 0.5 * res.dot(w);
  }
  return ll;
}

Vector surrogate_loglik_grad(const MomentModel& model, const Vector& theta,
                             const ObservationBatch& batch) {
  batch.validate();
  const int d = model.param_dim();
  struct GradTerms {
    MomentPair mp;
    MomentDerivs dm;
    std::vector<double> tr_a;      // tr(Sigma^{-1} dSigma_l)
    std::vector<Matrix> sinv_dca;  // Sigma^{-1} dSigma_l Sigma^{-1}
    std::vector<Vector> sinv_dmu;  // Sigma^{-1} dmu_l
  };
  std::map<int, GradTerms> cache;
  Vector grad = Vector::Zero(d);
  for (int r = 0; r < batch.n(); ++r) {
    const int i = model.iid() ? batch.index.front() : batch.index[r];
    auto it = cache.find(i);
    if (it == cache.end()) {
      GradTerms g;
      g.mp = model.moments(theta, i);
      CholeskyPD chol(g.mp.cov, i, theta);
      const Matrix sinv = chol.inverse();
      g.dm = model.dmoments(theta, i);
      g.tr_a.resize(d);
      g.sinv_dca.resize(d);
      g.sinv_dmu.resize(d);
      for (int l = 0; l < d; ++l) {
        g.tr_a[l] = (sinv * g.dm.dcov[l]).trace();
        g.sinv_dca[l] = sinv * g.dm.dcov[l] * sinv;
        g.sinv_dmu[l] = sinv * g.dm.dmean[l];
      }
      it = cache.emplace(i, std::move(g)).first;
    }
    const GradTerms& g = it->second;
    const Vector res = batch.x.row(r).transpose() - g.mp.mean;
    for (int l = 0; l < d; ++l) {
      grad[l] += g.sinv_dmu[l].dot(res) - 0.5 * g.tr_a[l] + 0.5 * res.dot(g.sinv_dca[l] * res);
    }
  }
  return grad;
}

Vector surrogate_loglik_grad_fd(const MomentModel& model, const Vector& theta,
                                const ObservationBatch& batch, double h_scale) {
  const int d = model.param_dim();
  Vector grad(d);
  for (int l = 0; l < d; ++l) {
    const double h = h_scale * std::max(1.0, std::abs(theta[l]));
    Vector tp = theta, tm = theta;
    tp[l] += h;
    tm[l] -= h;
    grad[l] = (surrogate_loglik(model, tp, batch) - surrogate_loglik(model, tm, batch)) / (2.0 * h);
  }
  return grad;
}

Vector exp_family_stats(const Vector& x) {
  const int p = static_cast<int>(x.size());
  Vector out(p + p * p);
  out.head(p) = x;
  for (int i = 0; i < p; ++i)       // row-major vec(x x^T)
    for (int j = 0; j < p; ++j) out[p + i * p + j] = x[i] * x[j];
  return out;
}

ObservationBatch sample_observations(const HierarchicalGenerator& gen, const Vector& theta0,
                                     int n, const RandomStream& stream) {
  if (n < 1) throw DimensionError("sample_observations: n must be >= 1");
  const int p = gen.obs_dim();
  ObservationBatch batch;
  batch.x.resize(n, p);
  batch.index.resize(n);
  parallel_for(n, [&](long i) {
    Rng rng(stream.substream(static_cast<std::uint64_t>(i)));
    const Vector eta = gen.latent_eta(theta0, static_cast<int>(i), rng);
    if (!eta.allFinite()) throw NumericalError("sample_observations: non-finite latent value");
    const Matrix& lambda = gen.noise_cov(static_cast<int>(i));
    Vector obs = eta;
    if (lambda.size() > 0 && lambda.cwiseAbs().maxCoeff() > 0) {
      obs += psd_sqrt(lambda) * rng.normal_vector(p);
    }
    batch.x.row(i) = obs.transpose();
    batch.index[i] = static_cast<int>(i);
  });
  return batch;
}

}  // namespace hbvm
