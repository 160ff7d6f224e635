#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "hbvm/square_integral.hpp"

using namespace hbvm;

namespace {

// Simpson validation quadrature (the basis invariant needs ~1e-9 accuracy,
// beyond what the trapezoid data path delivers at the same node count).
double simpson_inner(const LegendreBasis& basis, int j, int k, int intervals) {
  const double z = basis.length();
  const double h = z / intervals;
  double acc = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * basis.eval(j, i * h) * basis.eval(k, i * h);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("legendre coefficients match the closed form") {
  CHECK(legendre_coeff(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(legendre_coeff(1, 0) == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-14));
  CHECK(legendre_coeff(1, 1) == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-14));
  CHECK(legendre_coeff(2, 0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  CHECK(legendre_coeff(2, 1) == doctest::Approx(-6.0 * std::sqrt(5.0)).epsilon(1e-14));
  CHECK(legendre_coeff(2, 2) == doctest::Approx(6.0 * std::sqrt(5.0)).epsilon(1e-14));
  CHECK_THROWS_AS(legendre_coeff(1, 2), DimensionError);
}

TEST_CASE("basis orthonormality on [0,z] at 2048 intervals") {
  for (double z : {1.0, 0.25, 2.0}) {
    LegendreBasis basis(6, z);
    for (int j = 0; j <= 6; ++j)
      for (int k = j; k <= 6; ++k) {
        const double ip = simpson_inner(basis, j, k, 2048);
        CHECK(std::abs(ip - (j == k ? 1.0 : 0.0)) < 1e-8);
      }
  }
}

TEST_CASE("mean_mu closed form") {
  const Vector m0 = mean_mu(0.0, 1.0);
  CHECK(m0[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(m0[1] == doctest::Approx(std::sqrt(3.0) / 12.0).epsilon(1e-14));
  CHECK(m0[2] == doctest::Approx(std::sqrt(5.0) / 60.0).epsilon(1e-14));
  const Vector m2 = mean_mu(2.0, 1.0);
  CHECK(m2[0] == doctest::Approx(13.0 / 6.0).epsilon(1e-14));
  CHECK(m2[1] == doctest::Approx(3.0 * std::sqrt(3.0) / 4.0).epsilon(1e-14));
  CHECK(m2[2] == doctest::Approx(std::sqrt(5.0) / 60.0).epsilon(1e-14));
  CHECK_THROWS_AS(mean_mu(1.0, -1.0), DimensionError);
}

TEST_CASE("covariance coefficients") {
  CHECK(cov_coeff_b(0, 0) == doctest::Approx(1.0 / 30.0).epsilon(1e-12));
  CHECK(cov_coeff_c(0, 0) == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
  // cross-check of the constant term: 1/18 - 1/45 + 1/36 minus (1/6)^2
  const double raw = 1.0 / 18.0 - 1.0 / 45.0 + 1.0 / 36.0;
  CHECK(cov_coeff_b(0, 0) == doctest::Approx(raw - 1.0 / 36.0).epsilon(1e-12));
  // theta^2 coefficient display: 1/3 - 1/6 + 1/30
  CHECK(cov_coeff_c(0, 0) == doctest::Approx(1.0 / 3.0 - 1.0 / 6.0 + 1.0 / 30.0).epsilon(1e-12));
}

TEST_CASE("covariance_sigma basics") {
  const Matrix s = covariance_sigma(0.0, 1.0, Matrix::Zero(3, 3));
  CHECK(s(0, 0) == doctest::Approx(1.0 / 30.0).epsilon(1e-12));
  for (double theta : {0.7, 2.0, 40.0}) {
    const Matrix a = covariance_sigma(theta, 1.0, Matrix::Zero(3, 3));
    const Matrix b = covariance_sigma(-theta, 1.0, Matrix::Zero(3, 3));
    CHECK((a - b).norm() == 0.0);        // even in theta
    CHECK((a - a.transpose()).norm() == 0.0);  // symmetric
  }
  CHECK_THROWS_AS(covariance_sigma(1.0, 0.0, Matrix::Zero(3, 3)), DimensionError);
}

TEST_CASE("brownian path simulator") {
  Rng probe(RandomStream{77, 0});
  auto p0 = simulate_bm_path(1.0, 100, probe);
  CHECK(p0[0] == 0.0);

  const int n = 100000;
  double var_end = 0.0, cov_mid_end = 0.0, mean_end = 0.0, mean_mid = 0.0;
  std::vector<double> ends(n), mids(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(RandomStream{78, static_cast<std::uint64_t>(i)});
    const auto p = simulate_bm_path(2.0, 64, rng);
    ends[i] = p[64];
    mids[i] = p[32];
    mean_end += ends[i];
    mean_mid += mids[i];
  }
  mean_end /= n;
  mean_mid /= n;
  for (int i = 0; i < n; ++i) {
    var_end += (ends[i] - mean_end) * (ends[i] - mean_end);
    cov_mid_end += (mids[i] - mean_mid) * (ends[i] - mean_end);
  }
  var_end /= n - 1;
  cov_mid_end /= n - 1;
  // Var B(z) = z within 4 SE, Cov(B(z/2), B(z)) = z/2 within 4 SE
  const double se_var = 2.0 * std::sqrt(2.0 / n);  // Var of chi2-scaled estimate, scale z = 2
  CHECK(std::abs(var_end - 2.0) < 4.0 * se_var);
  CHECK(std::abs(cov_mid_end - 1.0) < 4.0 * 1.5 * std::sqrt(2.0 / n) * 2.0);
}

TEST_CASE("forward map identities") {
  const int n = 1000;
  std::vector<double> cpath(n + 1, 1.5);   // f == theta
  auto t1 = forward_map(cpath, 1.0, 1.5);
  for (double v : t1) CHECK(v == 0.0);

  std::vector<double> zpath(n + 1, 0.0);   // f == 0, theta = 1 -> T(t) = t
  auto t2 = forward_map(zpath, 1.0, 1.0);
  CHECK(t2[n] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t2[n / 2] == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<double> ramp(n + 1);          // f(s) = s, theta = 0 -> T(1) = 1/3
  for (int i = 0; i <= n; ++i) ramp[i] = static_cast<double>(i) / n;
  auto t3 = forward_map(ramp, 1.0, 0.0);
  CHECK(std::abs(t3[n] - 1.0 / 3.0) < 1e-4);
  // nonnegative, nondecreasing
  for (int i = 1; i <= n; ++i) {
    CHECK(t3[i] >= t3[i - 1]);
    CHECK(t3[i] >= 0.0);
  }

  CHECK(forward_map_on(ramp, 1.0, 0.0, 11).size() == 11);
  CHECK_THROWS_AS(forward_map_on(ramp, 1.0, 0.0, 128), GridError);
}

TEST_CASE("project_legendre orthonormality on the data path") {
  LegendreBasis basis(2, 1.0);
  const int n = 2047;  // 2048 points
  for (int j = 0; j <= 1; ++j) {
    std::vector<double> vals(n + 1);
    for (int i = 0; i <= n; ++i) vals[i] = basis.eval(j, static_cast<double>(i) / n);
    CHECK(std::abs(project_legendre(vals, basis, j) - 1.0) < 1e-6);
    CHECK(std::abs(project_legendre(vals, basis, 1 - j) - 0.0) < 1e-6);
  }
  // constant function projects on e_0 alone
  std::vector<double> ones(n + 1, 1.0);
  CHECK(std::abs(project_legendre(ones, basis, 0) - 1.0) < 1e-9);
  // order 2: trapezoid endpoint error is ~2.4e-6 at this resolution
  std::vector<double> v2(n + 1);
  for (int i = 0; i <= n; ++i) v2[i] = basis.eval(2, static_cast<double>(i) / n);
  CHECK(std::abs(project_legendre(v2, basis, 2) - 1.0) < 1e-5);
}

TEST_CASE("mc oracle matches the closed forms") {
  for (double theta : {0.0, 2.0}) {
    const MomentEstimate est =
        mc_moments_oracle(theta, 1.0, 20000, 1000, RandomStream{5, static_cast<std::uint64_t>(theta)});
    const Vector mu = mean_mu(theta, 1.0);
    const Matrix sig = covariance_sigma(theta, 1.0, Matrix::Zero(3, 3));
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(est.value.mean[j] - mu[j]) < 4.0 * est.mean_se[j]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        CHECK(std::abs(est.value.cov(a, b) - sig(a, b)) < 4.0 * est.cov_se(a, b));
  }
}

TEST_CASE("mc oracle zero mean for j >= 3 when the basis is extended") {
  const int n_paths = 20000, n_steps = 500;
  const LegendreBasis basis(4, 1.0);
  double s3 = 0, s3sq = 0, s4 = 0, s4sq = 0;
  for (int i = 0; i < n_paths; ++i) {
    Rng rng(RandomStream{59, static_cast<std::uint64_t>(i)});
    const auto path = simulate_bm_path(1.0, n_steps, rng);
    const auto t = forward_map(path, 1.0, 0.0);
    const double c3 = project_legendre(t, basis, 3);
    const double c4 = project_legendre(t, basis, 4);
    s3 += c3;
    s3sq += c3 * c3;
    s4 += c4;
    s4sq += c4 * c4;
  }
  const double m3 = s3 / n_paths, m4 = s4 / n_paths;
  const double se3 = std::sqrt((s3sq / n_paths - m3 * m3) / n_paths);
  const double se4 = std::sqrt((s4sq / n_paths - m4 * m4) / n_paths);
  CHECK(std::abs(m3) < 4.0 * se3);
  CHECK(std::abs(m4) < 4.0 * se4);
}

TEST_CASE("mc oracle standard errors shrink like 1/sqrt(n)") {
  // log-log regression of SE(mean_0) on n over doublings; slope within
  // +-0.15 of -1/2
  std::vector<int> ns = {1000, 2000, 4000, 8000};
  std::vector<double> logn, logse;
  for (size_t i = 0; i < ns.size(); ++i) {
    const MomentEstimate est =
        mc_moments_oracle(2.0, 1.0, ns[i], 300, RandomStream{91, static_cast<std::uint64_t>(i)});
    logn.push_back(std::log(static_cast<double>(ns[i])));
    logse.push_back(std::log(est.mean_se[0]));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < ns.size(); ++i) {
    mx += logn[i];
    my += logse[i];
  }
  mx /= ns.size();
  my /= ns.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < ns.size(); ++i) {
    sxy += (logn[i] - mx) * (logse[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  const double slope = sxy / sxx;
  CHECK(slope > -0.65);
  CHECK(slope < -0.35);
}

TEST_CASE("model moments: Sigma minus Lambda stays PSD") {
  const Matrix lambda = 0.01 * Matrix::Identity(3, 3);
  SquareIntModel model({1.0, 0.5, 0.25}, lambda);
  for (double th : {0.5, 2.0, 40.0})
    for (int i : {0, 1, 2}) {
      const MomentPair mp = model.moments(Vector::Constant(1, th), i);
      Eigen::SelfAdjointEigenSolver<Matrix> es(mp.cov - lambda);
      CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
}
