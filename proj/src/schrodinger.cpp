#include "hbvm/schrodinger.hpp"

#include <algorithm>
#include <cmath>

#include "hbvm/linalg.hpp"
#include "hbvm/parallel.hpp"

namespace hbvm {

double Field2D::operator()(double x, double y) const {
  const double cx = std::clamp(x, 0.0, 1.0) * (n - 1);
  const double cy = std::clamp(y, 0.0, 1.0) * (n - 1);
  int i = static_cast<int>(cx);
  int j = static_cast<int>(cy);
  i = std::min(i, n - 2);
  j = std::min(j, n - 2);
  const double fx = cx - i;
  const double fy = cy - j;
  return values(i, j) * (1 - fx) * (1 - fy) + values(i + 1, j) * fx * (1 - fy) +
         values(i, j + 1) * (1 - fx) * fy + values(i + 1, j + 1) * fx * fy;
}

Field2D sample_field(const RandomStream& stream, int grid_n) {
  if (grid_n < 2) throw DimensionError("sample_field: grid must have at least 2 nodes");
  Rng rng(stream);
  const double sd = std::sqrt(1.0 / (grid_n - 1));
  std::vector<double> b1(grid_n), b2(grid_n);
  b1[0] = b2[0] = 0.0;
  for (int i = 1; i < grid_n; ++i) b1[i] = b1[i - 1] + sd * rng.normal();
  for (int i = 1; i < grid_n; ++i) b2[i] = b2[i - 1] + sd * rng.normal();
  Field2D f;
  f.n = grid_n;
  f.values.resize(grid_n, grid_n);
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j) f.values(i, j) = std::exp(2.0 * b1[i] + 3.0 * b2[j]);
  return f;
}

Field2D constant_field(int grid_n, double value) {
  Field2D f;
  f.n = grid_n;
  f.values = Matrix::Constant(grid_n, grid_n, value);
  return f;
}

TensorLegendreBasis::TensorLegendreBasis(int order) : order_(order), leg_(order, 1.0) {
  if (order < 0) throw DimensionError("TensorLegendreBasis: negative order");
}

double TensorLegendreBasis::eval(int k, double x, double y) const {
  if (k < 0 || k >= size()) throw DimensionError("TensorLegendreBasis: index out of range");
  const int i = k / (order_ + 1);
  const int j = k % (order_ + 1);
  return leg_.eval(i, x) * leg_.eval(j, y);
}

namespace {

struct PathResult {
  double payoff = 0.0;   // g contribution
  Vector dpayoff;        // dg/dtheta contribution
};

// One killed Brownian path from x0; returns discounted boundary payoff and
// its theta-gradient on the same path. Exit point interpolated along the
// crossing step, discount integral by the left-endpoint rule.
PathResult run_path(const Eigen::Vector2d& x0, const Field2D& field, const BoundaryCondition& g,
                    const Vector& theta, double dt, long step_cap, int d, Rng& rng) {
  const double sd = std::sqrt(dt);
  double x = x0[0], y = x0[1];
  double integral = 0.0;
  long steps = 0;
  for (;;) {
    if (++steps > step_cap)
      throw StepCapError("fk_solution_at: path exceeded the step cap");
    const double fx = field(x, y);
    const double nx = x + sd * rng.normal();
    const double ny = y + sd * rng.normal();
    if (nx <= 0.0 || nx >= 1.0 || ny <= 0.0 || ny >= 1.0) {
      // crossing fraction along the straight segment
      double alpha = 1.0;
      if (nx <= 0.0) alpha = std::min(alpha, (x - 0.0) / (x - nx));
      if (nx >= 1.0) alpha = std::min(alpha, (1.0 - x) / (nx - x));
      if (ny <= 0.0) alpha = std::min(alpha, (y - 0.0) / (y - ny));
      if (ny >= 1.0) alpha = std::min(alpha, (1.0 - y) / (ny - y));
      const double ex = std::clamp(x + alpha * (nx - x), 0.0, 1.0);
      const double ey = std::clamp(y + alpha * (ny - y), 0.0, 1.0);
      integral += fx * alpha * dt;
      const double disc = std::exp(-integral);
      PathResult r;
      r.payoff = g.value(theta, ex, ey) * disc;
      r.dpayoff = g.theta_grad(theta, ex, ey) * disc;
      if (r.dpayoff.size() != d) throw DimensionError("boundary gradient dimension mismatch");
      return r;
    }
    integral += fx * dt;
    x = nx;
    y = ny;
  }
}

}  // namespace

FkNodeEstimate fk_value_and_grad(const Eigen::Vector2d& x0, const Field2D& field,
                                 const BoundaryCondition& g, const Vector& theta,
                                 const FkSettings& fk, const RandomStream& stream, int d) {
  if (!(x0[0] > 0 && x0[0] < 1 && x0[1] > 0 && x0[1] < 1))
    throw DimensionError("fk_value_and_grad: start point must be interior");
  if (!(fk.dt > 0)) throw DimensionError("fk_value_and_grad: dt must be positive");
  const int n = fk.n_paths;
  std::vector<double> u(n);
  std::vector<Vector> du(n);
  parallel_for(n, [&](long i) {
    Rng rng(stream.substream(static_cast<std::uint64_t>(i)));
    const PathResult r = run_path(x0, field, g, theta, fk.dt, fk.step_cap, d, rng);
    u[i] = r.payoff;
    du[i] = r.dpayoff;
  });
  FkNodeEstimate est;
  est.n_samples = n;
  est.du = Vector::Zero(d);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    mean += u[i];
    est.du += du[i];
  }
  mean /= n;
  est.du /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (u[i] - mean) * (u[i] - mean);
  est.u = mean;
  est.u_se = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
  return est;
}

McScalar fk_solution_at(const Eigen::Vector2d& x0, const Field2D& field,
                        const BoundaryCondition& g, const Vector& theta, const FkSettings& fk,
                        const RandomStream& stream) {
  const FkNodeEstimate est =
      fk_value_and_grad(x0, field, g, theta, fk, stream, static_cast<int>(theta.size()));
  return {est.u, est.u_se, est.n_samples};
}

EtaEstimate eta_and_grad(const Field2D& field, const BoundaryCondition& g, const Vector& theta,
                         const TensorLegendreBasis& basis, int p, int quad_m,
                         const FkSettings& fk, const RandomStream& stream) {
  if (p < 1 || p > basis.size()) throw DimensionError("eta_and_grad: bad coordinate count");
  if (quad_m < 1) throw DimensionError("eta_and_grad: quadrature grid too small");
  const int d = static_cast<int>(theta.size());
  const int m = quad_m + 2;  // lattice including the boundary
  const double h = 1.0 / (m - 1);

  Matrix u(m, m);
  std::vector<Matrix> du(d, Matrix(m, m));
  // boundary rows/columns are exact
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == 0 || i == m - 1 || j == 0 || j == m - 1) {
        const double x = i * h, y = j * h;
        u(i, j) = g.value(theta, x, y);
        const Vector gg = g.theta_grad(theta, x, y);
        for (int l = 0; l < d; ++l) du[l](i, j) = gg[l];
      }
    }
  const int interior = (m - 2) * (m - 2);
  std::vector<FkNodeEstimate> est(interior);
  parallel_for(interior, [&](long k) {
    const int i = 1 + static_cast<int>(k) / (m - 2);
    const int j = 1 + static_cast<int>(k) % (m - 2);
    const Eigen::Vector2d x0(i * h, j * h);
    est[k] = fk_value_and_grad(x0, field, g, theta, fk,
                               stream.substream(static_cast<std::uint64_t>(k)), d);
  });
  for (long k = 0; k < interior; ++k) {
    const int i = 1 + static_cast<int>(k) / (m - 2);
    const int j = 1 + static_cast<int>(k) % (m - 2);
    u(i, j) = est[k].u;
    for (int l = 0; l < d; ++l) du[l](i, j) = est[k].du[l];
  }

  // 2-D trapezoid projection onto the first p tensor elements
  EtaEstimate out;
  out.eta = Vector::Zero(p);
  out.deta = Matrix::Zero(p, d);
  for (int c = 0; c < p; ++c) {
    double acc = 0.0;
    Vector dacc = Vector::Zero(d);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double w = h * h;
        if (i == 0 || i == m - 1) w *= 0.5;
        if (j == 0 || j == m - 1) w *= 0.5;
        const double e = basis.eval(c, i * h, j * h);
        acc += w * e * u(i, j);
        for (int l = 0; l < d; ++l) dacc[l] += w * e * du[l](i, j);
      }
    out.eta[c] = acc;
    out.deta.row(c) = dacc.transpose();
  }
  return out;
}

Vector eta_coeffs(const Field2D& field, const BoundaryCondition& g, const Vector& theta,
                  const TensorLegendreBasis& basis, int p, int quad_m, const FkSettings& fk,
                  const RandomStream& stream) {
  return eta_and_grad(field, g, theta, basis, p, quad_m, fk, stream).eta;
}

ObservationBatch sample_data_schrodinger(const Vector& theta0, int n,
                                         const SchrodingerSettings& settings,
                                         const RandomStream& stream) {
  if (n < 1) throw DimensionError("sample_data_schrodinger: n must be >= 1");
  const QuadraticRampBoundary g;
  const TensorLegendreBasis basis(settings.basis_order);
  const Matrix lam_sqrt = psd_sqrt(settings.lambda());
  ObservationBatch batch;
  batch.x.resize(n, settings.p);
  batch.index.assign(n, 0);
  parallel_for(n, [&](long i) {
    const RandomStream si = stream.substream(static_cast<std::uint64_t>(i));
    const Field2D f = sample_field(si.substream(0), settings.grid_n);
    const Vector eta = eta_coeffs(f, g, theta0, basis, settings.p, settings.quad_grid,
                                  settings.fk(), si.substream(1));
    Rng noise(si.substream(2));
    batch.x.row(i) = (eta + lam_sqrt * noise.normal_vector(settings.p)).transpose();
    batch.index[i] = static_cast<int>(i);
  });
  return batch;
}

SchrodingerMomentModel::SchrodingerMomentModel(SchrodingerSettings settings,
                                               const RandomStream& stream,
                                               std::shared_ptr<const BoundaryCondition> boundary)
    : settings_(settings),
      stream_(stream),
      boundary_(boundary ? std::move(boundary) : std::make_shared<QuadraticRampBoundary>()),
      basis_(settings.basis_order) {
  fields_.resize(settings_.n_fields);
  parallel_for(settings_.n_fields, [&](long k) {
    fields_[k] = sample_field(stream_.substream(2 * k), settings_.grid_n);
  });
}

const SchrodingerMomentModel::Cached& SchrodingerMomentModel::eval(const Vector& theta) const {
  const std::vector<double> key(theta.begin(), theta.end());
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  auto cached = std::make_shared<Cached>();
  cached->etas.resize(settings_.n_fields);
  // Each (field, quadrature node, path) triple has a stream fixed at
  // construction; theta only changes payoffs, so these maps are smooth in
  // theta and repeat evaluations are coupled.
  parallel_for(settings_.n_fields, [&](long k) {
    cached->etas[k] = eta_and_grad(fields_[k], *boundary_, theta, basis_, settings_.p,
                                   settings_.quad_grid, settings_.fk(),
                                   stream_.substream(2 * k + 1));
  });
  const int p = settings_.p;
  const int n = settings_.n_fields;
  Vector mu = Vector::Zero(p);
  Matrix dmu = Matrix::Zero(p, 1);
  for (const auto& e : cached->etas) {
    mu += e.eta;
    dmu += e.deta;
  }
  mu /= n;
  dmu /= n;
  Matrix cov = Matrix::Zero(p, p);
  Matrix dcov = Matrix::Zero(p, p);
  for (const auto& e : cached->etas) {
    const Vector r = e.eta - mu;
    const Vector dr = e.deta.col(0) - dmu.col(0);
    cov += r * r.transpose();
    dcov += dr * r.transpose() + r * dr.transpose();
  }
  cov /= n - 1;
  dcov /= n - 1;
  cached->mp.mean = mu;
  cached->mp.cov = 0.5 * (cov + cov.transpose()) + settings_.lambda();
  cached->dm.dmean = {dmu.col(0)};
  cached->dm.dcov = {0.5 * (dcov + dcov.transpose())};
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = cache_.emplace(key, std::move(cached));
  return *it->second;
}

MomentPair SchrodingerMomentModel::moments(const Vector& theta, int) const {
  return eval(theta).mp;
}

MomentDerivs SchrodingerMomentModel::dmoments(const Vector& theta, int) const {
  return eval(theta).dm;
}

const std::vector<EtaEstimate>& SchrodingerMomentModel::field_etas(const Vector& theta) const {
  return eval(theta).etas;
}

}  // namespace hbvm
