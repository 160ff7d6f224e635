#include "hbvm/square_integral.hpp"

#include <cmath>

#include "hbvm/linalg.hpp"
#include "hbvm/parallel.hpp"

namespace hbvm {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - k + i) / i;
  return r;
}

}  // namespace

double legendre_coeff(int j, int k) {
  if (j < 0 || k < 0 || k > j) throw DimensionError("legendre_coeff: need 0 <= k <= j");
  const double sign = ((j + k) % 2 == 0) ? 1.0 : -1.0;
  return std::sqrt(2.0 * j + 1.0) * sign * binomial(j, k) * binomial(j + k, k);
}

LegendreBasis::LegendreBasis(int max_order, double length)
    : max_order_(max_order), length_(length) {
  if (max_order < 0) throw DimensionError("LegendreBasis: negative order");
  if (!(length > 0)) throw DimensionError("LegendreBasis: interval length must be positive");
  a_.resize(max_order + 1);
  for (int j = 0; j <= max_order; ++j) {
    a_[j].resize(j + 1);
    for (int k = 0; k <= j; ++k) a_[j][k] = legendre_coeff(j, k);
  }
}

double LegendreBasis::coeff(int j, int k) const {
  if (j < 0 || j > max_order_ || k < 0 || k > j)
    throw DimensionError("LegendreBasis::coeff: index out of range");
  return a_[j][k];
}

double LegendreBasis::eval(int j, double x) const {
  if (j < 0 || j > max_order_) throw DimensionError("LegendreBasis::eval: order out of range");
  // Horner in x, with the z^{-k-1/2} normalization folded in via u = x/z.
  const double u = x / length_;
  double acc = 0.0;
  for (int k = j; k >= 0; --k) acc = acc * u + a_[j][k];
  return acc / std::sqrt(length_);
}

Vector mean_mu(double theta, double z) {
  if (!(z > 0)) throw DimensionError("mean_mu: z must be positive");
  const double z52 = std::pow(z, 2.5);
  const double z32 = std::pow(z, 1.5);
  const double t2 = theta * theta;
  Vector mu(3);
  mu[0] = z52 / 6.0 + z32 * t2 / 2.0;
  mu[1] = std::sqrt(3.0) * z52 / 12.0 + std::sqrt(3.0) * z32 * t2 / 6.0;
  mu[2] = std::sqrt(5.0) * z52 / 60.0;
  return mu;
}

Vector dmean_mu_dtheta(double theta, double z) {
  const double z32 = std::pow(z, 1.5);
  Vector d(3);
  d[0] = theta * z32;
  d[1] = std::sqrt(3.0) * theta * z32 / 3.0;
  d[2] = 0.0;
  return d;
}

double cov_coeff_b(int k, int l) {
  if (k < 0 || l < 0) throw DimensionError("cov_coeff_b: negative index");
  const double kk = k, ll = l;
  return (2.0 / 3.0) * (1.0 / ((4 + kk) * (kk + ll + 6)) +
                        (1.0 / (kk + 2)) * (1.0 / (ll + 4) - 1.0 / (kk + ll + 6))) -
         (1.0 / 3.0) * (1.0 / ((5 + kk) * (kk + ll + 6)) +
                        (1.0 / (kk + 1)) * (1.0 / (ll + 5) - 1.0 / (kk + ll + 6)));
}

double cov_coeff_c(int k, int l) {
  if (k < 0 || l < 0) throw DimensionError("cov_coeff_c: negative index");
  const double kk = k, ll = l;
  return 2.0 * (1.0 / ((kk + 3) * (kk + ll + 5)) +
                (1.0 / (kk + 2)) * (1.0 / (ll + 3) - 1.0 / (kk + ll + 5))) -
         (2.0 / 3.0) * (1.0 / ((kk + 4) * (kk + ll + 5)) +
                        (1.0 / (kk + 1)) * (1.0 / (ll + 4) - 1.0 / (kk + ll + 5)));
}

Matrix covariance_sigma(double theta, double z, const Matrix& lambda) {
  if (!(z > 0)) throw DimensionError("covariance_sigma: z must be positive");
  if (lambda.rows() != 3 || lambda.cols() != 3)
    throw DimensionError("covariance_sigma: Lambda must be 3x3");
  const double z5 = std::pow(z, 5);
  const double z4t2 = theta * theta * std::pow(z, 4);
  Matrix sigma = lambda;
  for (int j1 = 0; j1 < 3; ++j1)
    for (int j2 = 0; j2 < 3; ++j2) {
      double acc = 0.0;
      for (int l = 0; l <= j1; ++l)
        for (int k = 0; k <= j2; ++k)
          acc += legendre_coeff(j1, l) * legendre_coeff(j2, k) *
                 (z5 * cov_coeff_b(k, l) + z4t2 * cov_coeff_c(k, l));
      sigma(j1, j2) += acc;
    }
  return 0.5 * (sigma + sigma.transpose());
}

Matrix dcovariance_sigma_dtheta(double theta, double z) {
  const double f = 2.0 * theta * std::pow(z, 4);
  Matrix d = Matrix::Zero(3, 3);
  for (int j1 = 0; j1 < 3; ++j1)
    for (int j2 = 0; j2 < 3; ++j2) {
      double acc = 0.0;
      for (int l = 0; l <= j1; ++l)
        for (int k = 0; k <= j2; ++k)
          acc += legendre_coeff(j1, l) * legendre_coeff(j2, k) * cov_coeff_c(k, l);
      d(j1, j2) = f * acc;
    }
  return 0.5 * (d + d.transpose());
}

std::vector<double> simulate_bm_path(double z, int n_steps, Rng& rng) {
  if (n_steps < 1) throw DimensionError("simulate_bm_path: n_steps must be >= 1");
  const double sd = std::sqrt(z / n_steps);
  std::vector<double> path(n_steps + 1);
  path[0] = 0.0;
  for (int i = 1; i <= n_steps; ++i) path[i] = path[i - 1] + sd * rng.normal();
  return path;
}

std::vector<double> forward_map(const std::vector<double>& path, double z, double theta) {
  if (path.size() < 2) throw GridError("forward_map: path needs at least two points");
  const int n = static_cast<int>(path.size()) - 1;
  const double h = z / n;
  std::vector<double> out(path.size());
  out[0] = 0.0;
  double prev = (path[0] - theta) * (path[0] - theta);
  for (int i = 1; i <= n; ++i) {
    const double cur = (path[i] - theta) * (path[i] - theta);
    out[i] = out[i - 1] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  return out;
}

std::vector<double> forward_map_on(const std::vector<double>& path, double z, double theta,
                                   int out_points) {
  if (out_points < 2) throw GridError("forward_map_on: need at least two output points");
  const int n = static_cast<int>(path.size()) - 1;
  const int m = out_points - 1;
  if (n % m != 0)
    throw GridError("forward_map_on: output grid does not divide the path grid");
  const std::vector<double> fine = forward_map(path, z, theta);
  const int stride = n / m;
  std::vector<double> out(out_points);
  for (int i = 0; i < out_points; ++i) out[i] = fine[i * stride];
  return out;
}

double project_legendre(const std::vector<double>& values, const LegendreBasis& basis, int j) {
  if (j < 0 || j > basis.max_order())
    throw DimensionError("project_legendre: order out of range");
  if (values.size() < 2) throw GridError("project_legendre: need at least two grid values");
  const int n = static_cast<int>(values.size()) - 1;
  const double z = basis.length();
  const double h = z / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    acc += w * values[i] * basis.eval(j, i * h);
  }
  return acc * h;
}

Vector eta_square_integral(const std::vector<double>& path, double z, double theta,
                           int n_coords) {
  const LegendreBasis basis(n_coords - 1, z);
  const std::vector<double> t = forward_map(path, z, theta);
  Vector eta(n_coords);
  for (int j = 0; j < n_coords; ++j) eta[j] = project_legendre(t, basis, j);
  return eta;
}

MomentEstimate mc_moments_oracle(double theta, double z, int n_paths, int n_steps,
                                 const RandomStream& stream, int n_blocks) {
  if (n_paths < 100) throw DimensionError("mc_moments_oracle: need at least 100 paths");
  if (n_paths % n_blocks != 0) n_blocks = 50;
  if (n_paths % n_blocks != 0) n_blocks = 10;
  const int p = 3;
  Matrix etas(n_paths, p);
  parallel_for(n_paths, [&](long i) {
    Rng rng(stream.substream(static_cast<std::uint64_t>(i)));
    const std::vector<double> path = simulate_bm_path(z, n_steps, rng);
    etas.row(i) = eta_square_integral(path, z, theta, p).transpose();
  });

  const Vector mean = etas.colwise().mean().transpose();
  Matrix cov = Matrix::Zero(p, p);
  for (int i = 0; i < n_paths; ++i) {
    const Vector d = etas.row(i).transpose() - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n_paths - 1);

  // jackknife over blocks of paths
  const int bs = n_paths / n_blocks;
  Matrix jk_mean(n_blocks, p);
  std::vector<Matrix> jk_cov(n_blocks);
  for (int b = 0; b < n_blocks; ++b) {
    Vector m = Vector::Zero(p);
    for (int i = 0; i < n_paths; ++i)
      if (i / bs != b) m += etas.row(i).transpose();
    m /= static_cast<double>(n_paths - bs);
    Matrix c = Matrix::Zero(p, p);
    for (int i = 0; i < n_paths; ++i) {
      if (i / bs == b) continue;
      const Vector d = etas.row(i).transpose() - m;
      c += d * d.transpose();
    }
    c /= static_cast<double>(n_paths - bs - 1);
    jk_mean.row(b) = m.transpose();
    jk_cov[b] = c;
  }
  const double fac = static_cast<double>(n_blocks - 1) / n_blocks;
  Vector mean_se = Vector::Zero(p);
  const Vector jm = jk_mean.colwise().mean().transpose();
  for (int b = 0; b < n_blocks; ++b)
    mean_se += (jk_mean.row(b).transpose() - jm).array().square().matrix();
  mean_se = (fac * mean_se.array()).sqrt();
  Matrix cov_se = Matrix::Zero(p, p);
  Matrix jc = Matrix::Zero(p, p);
  for (int b = 0; b < n_blocks; ++b) jc += jk_cov[b];
  jc /= static_cast<double>(n_blocks);
  for (int b = 0; b < n_blocks; ++b)
    cov_se += (jk_cov[b] - jc).array().square().matrix();
  cov_se = (fac * cov_se.array()).sqrt();

  MomentEstimate est;
  est.value = {mean, cov};
  est.mean_se = mean_se;
  est.cov_se = cov_se;
  est.n_samples = n_paths;
  return est;
}

SquareIntModel::SquareIntModel(std::vector<double> z_seq, Matrix lambda)
    : z_seq_(std::move(z_seq)), lambda_(std::move(lambda)) {
  if (z_seq_.empty()) throw DimensionError("SquareIntModel: empty z sequence");
  for (double z : z_seq_)
    if (!(z > 0)) throw DimensionError("SquareIntModel: z_i must be positive");
  if (lambda_.rows() != 3 || lambda_.cols() != 3)
    throw DimensionError("SquareIntModel: Lambda must be 3x3");
  iid_ = true;
  for (double z : z_seq_)
    if (z != z_seq_.front()) {
      iid_ = false;
      break;
    }
}

double SquareIntModel::z_at(int index) const {
  if (index < 0) throw DimensionError("SquareIntModel: negative index");
  // cyclic extension so i.i.d. batches can use a singleton z sequence
  return z_seq_[static_cast<size_t>(index) % z_seq_.size()];
}

MomentPair SquareIntModel::moments(const Vector& theta, int index) const {
  const double z = z_at(index);
  return {mean_mu(theta[0], z), covariance_sigma(theta[0], z, lambda_)};
}

MomentDerivs SquareIntModel::dmoments(const Vector& theta, int index) const {
  const double z = z_at(index);
  MomentDerivs d;
  d.dmean = {dmean_mu_dtheta(theta[0], z)};
  d.dcov = {dcovariance_sigma_dtheta(theta[0], z)};
  return d;
}

SquareIntGenerator::SquareIntGenerator(std::vector<double> z_seq, Matrix lambda, int n_steps)
    : z_seq_(std::move(z_seq)), lambda_(std::move(lambda)), n_steps_(n_steps) {
  if (z_seq_.empty()) throw DimensionError("SquareIntGenerator: empty z sequence");
  if (n_steps_ < 1) throw DimensionError("SquareIntGenerator: n_steps must be >= 1");
}

Vector SquareIntGenerator::latent_eta(const Vector& theta0, int index, Rng& rng) const {
  const double z = z_seq_[index % z_seq_.size()];
  const std::vector<double> path = simulate_bm_path(z, n_steps_, rng);
  return eta_square_integral(path, z, theta0[0], 3);
}

const Matrix& SquareIntGenerator::noise_cov(int) const { return lambda_; }

}  // namespace hbvm
