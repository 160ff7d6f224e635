#include "hbvm/fisher.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "hbvm/linalg.hpp"
#include "hbvm/parallel.hpp"

namespace hbvm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

std::pair<double, Vector> conditional_density_and_dtheta(const Vector& x, const LatentDraw& f,
                                                         const Matrix& lambda) {
  CholeskyPD chol(lambda);
  const Vector r = x - f.eta;
  const Vector w = chol.solve(r);
  const double logp =
      -0.5 * x.size() * kLog2Pi - 0.5 * chol.log_det() - 0.5 * r.dot(w);
  const double p = std::exp(logp);
  return {p, p * (f.deta.transpose() * w)};
}

FisherEstimate true_fisher_mc(const LatentForwardSampler& sampler, const Vector& theta0,
                              const FisherSettings& settings, const RandomStream& stream) {
  if (settings.n_outer < 2 || settings.n_inner < 2)
    throw DimensionError("true_fisher_mc: budgets must be >= 2");
  const int p = sampler.obs_dim();
  const int d = sampler.param_dim();
  const Matrix& lambda = sampler.noise_cov();
  CholeskyPD chol(lambda);
  const double log_norm = -0.5 * p * kLog2Pi - 0.5 * chol.log_det();
  const Matrix sinv = chol.inverse();
  const Matrix lam_sqrt = psd_sqrt(lambda);

  // inner latent sample(s); stream_id space: 1 = shared inner, 2 = outer
  std::vector<LatentDraw> shared;
  if (settings.shared_inner) {
    shared.resize(settings.n_inner);
    parallel_for(settings.n_inner, [&](long k) {
      Rng rng(stream.substream(1).substream(static_cast<std::uint64_t>(k)));
      shared[k] = sampler.draw(theta0, rng);
    });
  }

  struct OuterResult {
    Matrix ss;  // score * score'
    bool dropped = false;
  };
  std::vector<OuterResult> results(settings.n_outer);
  parallel_for(settings.n_outer, [&](long j) {
    const RandomStream sj = stream.substream(2).substream(static_cast<std::uint64_t>(j));
    Rng rng(sj.substream(0));
    // fresh X from the true model
    const LatentDraw fx = sampler.draw(theta0, rng);
    const Vector x = fx.eta + lam_sqrt * rng.normal_vector(p);

    std::vector<LatentDraw> local;
    const std::vector<LatentDraw>* inner = &shared;
    if (!settings.shared_inner) {
      local.resize(settings.n_inner);
      Rng irng(sj.substream(1));
      for (long k = 0; k < settings.n_inner; ++k) local[k] = sampler.draw(theta0, irng);
      inner = &local;
    }

    // log-domain inner averaging with max-shift
    const long n = settings.n_inner;
    std::vector<double> logp(n);
    double shift = -std::numeric_limits<double>::infinity();
    for (long k = 0; k < n; ++k) {
      const Vector r = x - (*inner)[k].eta;
      logp[k] = log_norm - 0.5 * r.dot(sinv * r);
      if (logp[k] > shift) shift = logp[k];
    }
    OuterResult out;
    if (!std::isfinite(shift)) {
      out.dropped = true;
      out.ss = Matrix::Zero(d, d);
      results[j] = std::move(out);
      return;
    }
    double den = 0.0;
    Vector num = Vector::Zero(d);
    for (long k = 0; k < n; ++k) {
      const double w = std::exp(logp[k] - shift);
      den += w;
      const Vector r = x - (*inner)[k].eta;
      num += w * ((*inner)[k].deta.transpose() * (sinv * r));
    }
    const Vector score = num / den;
    out.ss = score * score.transpose();
    results[j] = std::move(out);
  });

  FisherEstimate est;
  est.n_outer = settings.n_outer;
  est.n_inner = settings.n_inner;
  Matrix sum = Matrix::Zero(d, d);
  long kept = 0;
  for (const auto& r : results) {
    if (r.dropped) {
      est.n_dropped += 1;
      continue;
    }
    sum += r.ss;
    kept += 1;
  }
  if (static_cast<double>(est.n_dropped) >
      settings.max_drop_fraction * static_cast<double>(settings.n_outer)) {
    throw NumericalError("true_fisher_mc: more than " +
                         std::to_string(100 * settings.max_drop_fraction) +
                         "% of outer draws dropped; n_inner looks too small");
  }
  if (kept < 2) throw NumericalError("true_fisher_mc: not enough outer draws kept");
  est.value = sum / static_cast<double>(kept);

  // jackknife over contiguous blocks of outer draws
  int blocks = settings.jackknife_blocks;
  while (blocks > 1 && settings.n_outer % blocks != 0) --blocks;
  const long bs = settings.n_outer / blocks;
  std::vector<Matrix> block_sum(blocks, Matrix::Zero(d, d));
  std::vector<long> block_kept(blocks, 0);
  for (long j = 0; j < settings.n_outer; ++j) {
    if (results[j].dropped) continue;
    block_sum[j / bs] += results[j].ss;
    block_kept[j / bs] += 1;
  }
  std::vector<Matrix> jk(blocks);
  Matrix jk_mean = Matrix::Zero(d, d);
  for (int b = 0; b < blocks; ++b) {
    const long nk = kept - block_kept[b];
    jk[b] = nk > 0 ? Matrix((sum - block_sum[b]) / static_cast<double>(nk))
                   : Matrix(Matrix::Zero(d, d));
    jk_mean += jk[b];
  }
  jk_mean /= blocks;
  Matrix var = Matrix::Zero(d, d);
  for (int b = 0; b < blocks; ++b) var += (jk[b] - jk_mean).array().square().matrix();
  est.std_error = (static_cast<double>(blocks - 1) / blocks * var.array()).sqrt();
  return est;
}

}  // namespace hbvm
