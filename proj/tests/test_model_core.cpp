#include <doctest.h>

#include <cmath>

#include "hbvm/bvm.hpp"
#include "hbvm/model.hpp"
#include "hbvm/parallel.hpp"
#include "hbvm/square_integral.hpp"

using namespace hbvm;

namespace {

// mu_theta = theta, Sigma = 1 (d = p = 1)
class LinearGaussianModel : public MomentModel {
 public:
  int param_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  MomentPair moments(const Vector& theta, int) const override {
    return {theta, Matrix::Identity(1, 1)};
  }
  MomentDerivs dmoments(const Vector&, int) const override {
    return {{Vector::Ones(1)}, {Matrix::Zero(1, 1)}};
  }
  bool iid() const override { return true; }
};

ObservationBatch single(double x) {
  ObservationBatch b;
  b.x = Matrix::Constant(1, 1, x);
  b.index = {0};
  return b;
}

class FixedMomentModel : public MomentModel {
 public:
  FixedMomentModel(MomentPair mp) : mp_(std::move(mp)) {}
  int param_dim() const override { return 1; }
  int obs_dim() const override { return static_cast<int>(mp_.mean.size()); }
  MomentPair moments(const Vector&, int) const override { return mp_; }
  bool iid() const override { return true; }

 private:
  MomentPair mp_;
};

}  // namespace

TEST_CASE("surrogate loglik standard normal values") {
  LinearGaussianModel model;
  Vector theta = Vector::Zero(1);
  CHECK(surrogate_loglik(model, theta, single(0.0)) ==
        doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-12));
  CHECK(surrogate_loglik(model, theta, single(1.0)) ==
        doctest::Approx(-0.5 * std::log(2 * M_PI) - 0.5).epsilon(1e-12));
}

TEST_CASE("surrogate loglik bivariate example") {
  MomentPair mp;
  mp.mean = Vector::Zero(2);
  mp.cov.resize(2, 2);
  mp.cov << 2, 1, 1, 2;
  FixedMomentModel model(mp);
  ObservationBatch b;
  b.x.resize(1, 2);
  b.x << 1, 2;
  b.index = {0};
  // hand linear algebra: -log(2 pi) - log(3)/2 - 1
  const double expected = -std::log(2 * M_PI) - 0.5 * std::log(3.0) - 1.0;
  CHECK(expected == doctest::Approx(-3.38718).epsilon(1e-4));
  CHECK(surrogate_loglik(model, Vector::Zero(1), b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loglik additivity over singletons") {
  std::vector<double> zs(7);
  for (int i = 0; i < 7; ++i) zs[i] = 0.5 + 0.1 * i;
  SquareIntModel model(zs, 0.01 * Matrix::Identity(3, 3));
  SquareIntGenerator gen(zs, 0.01 * Matrix::Identity(3, 3), 200);
  Vector theta0 = Vector::Constant(1, 2.0);
  const ObservationBatch batch = sample_observations(gen, theta0, 7, RandomStream{3, 0});
  const double whole = surrogate_loglik(model, theta0, batch);
  double parts = 0.0;
  for (int r = 0; r < batch.n(); ++r) {
    ObservationBatch s;
    s.x = batch.x.row(r);
    s.index = {batch.index[r]};
    parts += surrogate_loglik(model, theta0, s);
  }
  CHECK(whole == doctest::Approx(parts).epsilon(1e-10));
}

TEST_CASE("non positive definite covariance raises a structured error") {
  MomentPair mp;
  mp.mean = Vector::Zero(2);
  mp.cov.resize(2, 2);
  mp.cov << 1, 2, 2, 1;  // indefinite
  FixedMomentModel model(mp);
  ObservationBatch b;
  b.x = Matrix::Zero(1, 2);
  b.index = {0};
  try {
    surrogate_loglik(model, Vector::Constant(1, 0.25), b);
    FAIL("expected NotPositiveDefiniteError");
  } catch (const NotPositiveDefiniteError& e) {
    CHECK(e.index() == 0);
    CHECK(e.theta()[0] == doctest::Approx(0.25));
    CHECK(std::string(e.what()).find("index 0") != std::string::npos);
  }
}

TEST_CASE("gradient: linear-Gaussian score is the residual") {
  LinearGaussianModel model;
  Vector theta = Vector::Constant(1, 1.0);
  CHECK(surrogate_loglik_grad(model, theta, single(1.0))[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(surrogate_loglik_grad(model, theta, single(2.0))[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central differences at random theta") {
  SquareIntModel model({1.0}, 0.01 * Matrix::Identity(3, 3));
  SquareIntGenerator gen({1.0}, 0.01 * Matrix::Identity(3, 3), 200);
  const ObservationBatch batch =
      sample_observations(gen, Vector::Constant(1, 2.0), 25, RandomStream{17, 0});
  Rng rng(RandomStream{17, 1});
  for (int t = 0; t < 20; ++t) {
    Vector theta = Vector::Constant(1, 0.5 + 3.0 * rng.uniform01());
    const Vector g = surrogate_loglik_grad(model, theta, batch);
    const Vector gfd = surrogate_loglik_grad_fd(model, theta, batch);
    CHECK(g[0] == doctest::Approx(gfd[0]).epsilon(1e-6));
  }
}

TEST_CASE("analytic dmoments agree with finite differences") {
  SquareIntModel model({1.0, 0.5}, 0.01 * Matrix::Identity(3, 3));
  Rng rng(RandomStream{23, 0});
  for (int t = 0; t < 20; ++t) {
    Vector theta = Vector::Constant(1, 0.25 + 3.0 * rng.uniform01());
    for (int idx : {0, 1}) {
      const MomentDerivs an = model.dmoments(theta, idx);
      const MomentDerivs fd = finite_diff_dmoments(model, theta, idx);
      CHECK((an.dmean[0] - fd.dmean[0]).norm() <= 1e-5 * (1.0 + fd.dmean[0].norm()));
      CHECK((an.dcov[0] - fd.dcov[0]).norm() <= 1e-5 * (1.0 + fd.dcov[0].norm()));
    }
  }
}

TEST_CASE("exp family stats layout") {
  Vector x1 = Vector::Constant(1, 2.0);
  Vector s1 = exp_family_stats(x1);
  CHECK(s1.size() == 2);
  CHECK(s1[0] == 2.0);
  CHECK(s1[1] == 4.0);

  Vector x2(2);
  x2 << 1, 2;
  Vector s2 = exp_family_stats(x2);
  CHECK(s2.size() == 6);
  CHECK(s2[0] == 1.0);
  CHECK(s2[1] == 2.0);
  CHECK(s2[2] == 1.0);  // row-major vec(x x')
  CHECK(s2[3] == 2.0);
  CHECK(s2[4] == 2.0);
  CHECK(s2[5] == 4.0);

  Vector x0 = Vector::Zero(1);
  Vector s0 = exp_family_stats(x0);
  CHECK(s0[0] == 0.0);
  CHECK(s0[1] == 0.0);
}

namespace {

class ConstantGenerator : public HierarchicalGenerator {
 public:
  ConstantGenerator() : lambda_(Matrix::Zero(3, 3)), c_(Vector::Constant(3, 4.5)) {}
  int obs_dim() const override { return 3; }
  Vector latent_eta(const Vector&, int, Rng&) const override { return c_; }
  const Matrix& noise_cov(int) const override { return lambda_; }

 private:
  Matrix lambda_;
  Vector c_;
};

}  // namespace

TEST_CASE("sample_observations: constant generator with zero noise") {
  ConstantGenerator gen;
  const ObservationBatch b = sample_observations(gen, Vector::Zero(1), 5, RandomStream{1, 2});
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 3; ++c) CHECK(b.x(r, c) == 4.5);
}

TEST_CASE("sample_observations: determinism and thread independence") {
  SquareIntGenerator gen({1.0}, 0.01 * Matrix::Identity(3, 3), 100);
  Vector theta0 = Vector::Constant(1, 2.0);
  const ObservationBatch a = sample_observations(gen, theta0, 64, RandomStream{9, 1});
  const ObservationBatch b = sample_observations(gen, theta0, 64, RandomStream{9, 1});
  CHECK(a.x == b.x);
  set_max_threads(1);
  const ObservationBatch c = sample_observations(gen, theta0, 64, RandomStream{9, 1});
  set_max_threads(0);
  CHECK(a.x == c.x);
  const ObservationBatch d = sample_observations(gen, theta0, 64, RandomStream{9, 2});
  CHECK(a.x != d.x);
}

TEST_CASE("sample_observations: mean of first coordinate at theta0=2") {
  // mu_0 = 1/6 + theta0^2 / 2 = 13/6
  SquareIntGenerator gen({1.0}, Matrix::Zero(3, 3), 400);
  const int n = 10000;
  const ObservationBatch b =
      sample_observations(gen, Vector::Constant(1, 2.0), n, RandomStream{31, 0});
  const double mean = b.x.col(0).mean();
  double var = 0.0;
  for (int r = 0; r < n; ++r) var += (b.x(r, 0) - mean) * (b.x(r, 0) - mean);
  var /= n - 1;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean - 13.0 / 6.0) < 4.0 * se);
}

TEST_CASE("score mean is zero at theta0 over replicated batches") {
  SquareIntModel model({1.0}, 0.01 * Matrix::Identity(3, 3));
  SquareIntGenerator gen({1.0}, 0.01 * Matrix::Identity(3, 3), 200);
  Vector theta0 = Vector::Constant(1, 2.0);
  const int reps = 200, n = 40;
  double s = 0, s2 = 0;
  for (int r = 0; r < reps; ++r) {
    const ObservationBatch batch =
        sample_observations(gen, theta0, n, RandomStream{101, static_cast<std::uint64_t>(r)});
    const double score = surrogate_loglik_grad(model, theta0, batch)[0] / std::sqrt(1.0 * n);
    s += score;
    s2 += score * score;
  }
  const double mean = s / reps;
  const double sd = std::sqrt((s2 / reps - mean * mean) / reps);
  CHECK(std::abs(mean) < 4.0 * sd);
}
