#include "hbvm/parabolic.hpp"

#include <algorithm>
#include <cmath>

#include "hbvm/linalg.hpp"
#include "hbvm/parallel.hpp"

namespace hbvm {

double Field1D::operator()(double x) const {
  const int n = static_cast<int>(values.size());
  const double c = std::clamp(x, 0.0, 1.0) * (n - 1);
  int i = std::min(static_cast<int>(c), n - 2);
  const double f = c - i;
  return values[i] * (1 - f) + values[i + 1] * f;
}

Field1D sample_field_1d(const RandomStream& stream, int grid_n) {
  if (grid_n < 2) throw DimensionError("sample_field_1d: grid must have at least 2 nodes");
  Rng rng(stream);
  const double sd = std::sqrt(1.0 / (grid_n - 1));
  Field1D f;
  f.values.resize(grid_n);
  double b = 0.0;
  f.values[0] = 1.0;
  for (int i = 1; i < grid_n; ++i) {
    b += sd * rng.normal();
    f.values[i] = std::exp(b);
  }
  return f;
}

Field1D constant_field_1d(int grid_n, double value) {
  Field1D f;
  f.values = Vector::Constant(grid_n, value);
  return f;
}

void ParabolicSpec::validate() const {
  if (dim < 1 || lo.size() != dim || hi.size() != dim)
    throw DimensionError("ParabolicSpec: inconsistent domain");
  if (!(t_max > 0)) throw DimensionError("ParabolicSpec: t_max must be positive");
  for (double t : obs_times)
    if (!(t > 0 && t < t_max)) throw DimensionError("ParabolicSpec: obs times must lie in (0, t_max)");
  if (!(lambda_min >= 0) || lambda_max < lambda_min)
    throw DimensionError("ParabolicSpec: bad ellipticity bounds");
}

namespace {

bool outside_box(const Vector& x, const Vector& lo, const Vector& hi) {
  for (int a = 0; a < x.size(); ++a)
    if (x[a] <= lo[a] || x[a] >= hi[a]) return true;
  return false;
}

// crossing fraction along the segment from inside point x to outside point y
double crossing_fraction(const Vector& x, const Vector& y, const Vector& lo, const Vector& hi) {
  double alpha = 1.0;
  for (int a = 0; a < x.size(); ++a) {
    if (y[a] <= lo[a]) alpha = std::min(alpha, (x[a] - lo[a]) / (x[a] - y[a]));
    if (y[a] >= hi[a]) alpha = std::min(alpha, (hi[a] - x[a]) / (y[a] - x[a]));
  }
  return std::max(0.0, alpha);
}

// scalar fast path keeps the eigensolver out of the stepping loop
Matrix diffusion_sqrt(const Matrix& a) {
  if (a.rows() == 1) {
    if (a(0, 0) < -1e-10) throw NumericalError("diffusion_sqrt: negative diffusion");
    return Matrix::Constant(1, 1, std::sqrt(std::max(0.0, a(0, 0))));
  }
  return psd_sqrt(a);
}

}  // namespace

DiffusionPath euler_maruyama_path(const Vector& x0, double t0, const ParabolicSpec& spec,
                                  double dt, const RandomStream& stream) {
  spec.validate();
  if (outside_box(x0, spec.lo, spec.hi))
    throw DimensionError("euler_maruyama_path: start point must be interior");
  if (!(dt > 0) || t0 >= spec.t_max)
    throw DimensionError("euler_maruyama_path: need dt > 0 and t0 < t_max");
  Rng rng(stream);
  DiffusionPath path;
  path.t0 = t0;
  path.dt = dt;
  path.states.push_back(x0);
  double t = t0;
  Vector x = x0;
  for (;;) {
    const double step = std::min(dt, spec.t_max - t);
    if (step <= 0) {
      path.exit_flag = ExitFlag::terminal;
      path.exit_time = spec.t_max;
      path.exit_point = x;
      return path;
    }
    const Matrix a = spec.diffusion(x);
    const Vector b = spec.drift(x);
    Vector next = x + b * step;
    if (a.cwiseAbs().maxCoeff() > 0) next += diffusion_sqrt(a) * (std::sqrt(step) * rng.normal_vector(spec.dim));
    if (!next.allFinite()) throw NumericalError("euler_maruyama_path: non-finite state");
    if (outside_box(next, spec.lo, spec.hi)) {
      const double alpha = crossing_fraction(x, next, spec.lo, spec.hi);
      path.exit_flag = ExitFlag::boundary;
      path.exit_time = t + alpha * step;
      path.exit_point = x + alpha * (next - x);
      for (int axis = 0; axis < spec.dim; ++axis)
        path.exit_point[axis] = std::clamp(path.exit_point[axis], spec.lo[axis], spec.hi[axis]);
      path.states.push_back(path.exit_point);
      return path;
    }
    t += step;
    x = next;
    path.states.push_back(x);
    if (t >= spec.t_max) {
      path.exit_flag = ExitFlag::terminal;
      path.exit_time = spec.t_max;
      path.exit_point = x;
      return path;
    }
  }
}

namespace {

struct ParabolicPathValue {
  double u;
  Vector du;
};

// One path of the discounted payoff + running source, with theta-gradients
// accumulated along the same trajectory.
ParabolicPathValue run_parabolic_path(double t, const Vector& x0, const ParabolicSpec& spec,
                                      const Vector& theta, double dt, long step_cap, int d,
                                      Rng& rng) {
  double time = t;
  Vector x = x0;
  double c_int = 0.0;        // int c
  Vector dc_int = Vector::Zero(d);
  double source = 0.0;       // int f e^{-int c}
  Vector dsource = Vector::Zero(d);
  long steps = 0;
  for (;;) {
    if (time >= spec.t_max) break;
    if (++steps > step_cap) throw StepCapError("fk_parabolic: path exceeded the step cap");
    const double step = std::min(dt, spec.t_max - time);
    // left-endpoint accumulation at the current state
    const double cx = spec.potential(theta, x);
    const Vector dcx = spec.potential_grad(theta, x);
    const double fx = spec.source(x);
    const double disc = std::exp(-c_int);
    source += fx * disc * step;
    dsource -= fx * disc * step * dc_int;
    const Matrix a = spec.diffusion(x);
    const Vector b = spec.drift(x);
    Vector next = x + b * step;
    if (a.cwiseAbs().maxCoeff() > 0)
      next += diffusion_sqrt(a) * (std::sqrt(step) * rng.normal_vector(spec.dim));
    if (!next.allFinite()) throw NumericalError("fk_parabolic: non-finite state");
    if (outside_box(next, spec.lo, spec.hi)) {
      const double alpha = crossing_fraction(x, next, spec.lo, spec.hi);
      c_int += cx * alpha * step;
      dc_int += dcx * alpha * step;
      Vector exit = x + alpha * (next - x);
      for (int axis = 0; axis < spec.dim; ++axis)
        exit[axis] = std::clamp(exit[axis], spec.lo[axis], spec.hi[axis]);
      const double te = time + alpha * step;
      const double de = std::exp(-c_int);
      const double g = spec.boundary(theta, te, exit);
      const Vector dg = spec.boundary_grad(theta, te, exit);
      ParabolicPathValue v;
      v.u = g * de + source;
      v.du = dg * de - g * de * dc_int + dsource;
      return v;
    }
    c_int += cx * step;
    dc_int += dcx * step;
    time += step;
    x = next;
  }
  // terminal
  const double de = std::exp(-c_int);
  const double g = spec.boundary(theta, spec.t_max, x);
  const Vector dg = spec.boundary_grad(theta, spec.t_max, x);
  ParabolicPathValue v;
  v.u = g * de + source;
  v.du = dg * de - g * de * dc_int + dsource;
  return v;
}

}  // namespace

FkParabolicEstimate fk_parabolic_and_grad(double t, const Vector& x0, const ParabolicSpec& spec,
                                          const Vector& theta, int n_paths, double dt,
                                          const RandomStream& stream, int d, long step_cap) {
  spec.validate();
  if (outside_box(x0, spec.lo, spec.hi))
    throw DimensionError("fk_parabolic: start point must be interior");
  if (t > spec.t_max) throw DimensionError("fk_parabolic: t must be <= t_max");
  FkParabolicEstimate est;
  est.du = Vector::Zero(d);
  if (t >= spec.t_max) {  // terminal limit, no paths
    est.u = spec.boundary(theta, spec.t_max, x0);
    est.du = spec.boundary_grad(theta, spec.t_max, x0);
    est.n_samples = 0;
    return est;
  }
  std::vector<double> u(n_paths);
  std::vector<Vector> du(n_paths);
  parallel_for(n_paths, [&](long i) {
    Rng rng(stream.substream(static_cast<std::uint64_t>(i)));
    const ParabolicPathValue v = run_parabolic_path(t, x0, spec, theta, dt, step_cap, d, rng);
    u[i] = v.u;
    du[i] = v.du;
  });
  double mean = 0.0;
  for (int i = 0; i < n_paths; ++i) {
    mean += u[i];
    est.du += du[i];
  }
  mean /= n_paths;
  est.du /= n_paths;
  double var = 0.0;
  for (int i = 0; i < n_paths; ++i) var += (u[i] - mean) * (u[i] - mean);
  est.u = mean;
  est.u_se = n_paths > 1 ? std::sqrt(var / (n_paths - 1) / n_paths) : 0.0;
  est.n_samples = n_paths;
  return est;
}

McScalar fk_parabolic(double t, const Vector& x0, const ParabolicSpec& spec, const Vector& theta,
                      int n_paths, double dt, const RandomStream& stream, long step_cap) {
  const FkParabolicEstimate est = fk_parabolic_and_grad(
      t, x0, spec, theta, n_paths, dt, stream, static_cast<int>(theta.size()), step_cap);
  return {est.u, est.u_se, est.n_samples};
}

namespace {

// u(t_i, .) and its theta-gradient on the full 1-D lattice, then projected.
ParabolicMomentModel::EtaPair eta_pair_parabolic(const ParabolicSpec& spec, const Vector& theta,
                                                 int time_index, const LegendreBasis& basis,
                                                 int p, int quad_m, int n_paths, double dt,
                                                 const RandomStream& stream, long step_cap) {
  if (spec.dim != 1)
    throw DimensionError("eta_coeffs_parabolic: projection implemented for 1-D domains");
  if (time_index < 0 || static_cast<size_t>(time_index) >= spec.obs_times.size())
    throw DimensionError("eta_coeffs_parabolic: time index out of range");
  const double t = spec.obs_times[time_index];
  const int d = static_cast<int>(theta.size());
  const int m = quad_m + 2;
  const double lo = spec.lo[0], hi = spec.hi[0];
  const double h = (hi - lo) / (m - 1);
  Vector u(m);
  Matrix du(m, d);
  // boundary values exact
  for (int end : {0, m - 1}) {
    Vector x(1);
    x[0] = lo + end * h;
    u[end] = spec.boundary(theta, t, x);
    du.row(end) = spec.boundary_grad(theta, t, x).transpose();
  }
  std::vector<FkParabolicEstimate> est(m - 2);
  parallel_for(m - 2, [&](long k) {
    Vector x(1);
    x[0] = lo + (k + 1) * h;
    est[k] = fk_parabolic_and_grad(t, x, spec, theta, n_paths, dt,
                                   stream.substream(static_cast<std::uint64_t>(k)), d, step_cap);
  });
  for (int k = 0; k < m - 2; ++k) {
    u[k + 1] = est[k].u;
    du.row(k + 1) = est[k].du.transpose();
  }
  ParabolicMomentModel::EtaPair out;
  out.eta = Vector::Zero(p);
  out.deta = Matrix::Zero(p, d);
  for (int c = 0; c < p; ++c) {
    double acc = 0.0;
    Vector dacc = Vector::Zero(d);
    for (int k = 0; k < m; ++k) {
      const double w = (k == 0 || k == m - 1) ? 0.5 * h : h;
      const double e = basis.eval(c, (lo + k * h) - lo);  // basis on [0, hi-lo]
      acc += w * e * u[k];
      dacc += w * e * du.row(k).transpose();
    }
    out.eta[c] = acc;
    out.deta.row(c) = dacc.transpose();
  }
  return out;
}

}  // namespace

Vector eta_coeffs_parabolic(const ParabolicSpec& spec, const Vector& theta, int time_index,
                            const LegendreBasis& basis, int p, int quad_m, int n_paths,
                            double dt, const RandomStream& stream) {
  return eta_pair_parabolic(spec, theta, time_index, basis, p, quad_m, n_paths, dt, stream,
                            10000000)
      .eta;
}

std::vector<double> ParabolicSettings::obs_times() const {
  // equally spaced in (0.05, 0.45) scaled by t_max / 0.5
  std::vector<double> times(t_points);
  const double a = 0.1 * t_max, b = 0.9 * t_max;
  for (int i = 0; i < t_points; ++i)
    times[i] = t_points == 1 ? 0.5 * (a + b) : a + (b - a) * i / (t_points - 1);
  return times;
}

ParabolicSpec reference_parabolic_spec(const ParabolicSettings& settings, Field1D field) {
  ParabolicSpec spec;
  spec.dim = 1;
  spec.lo = Vector::Constant(1, 0.0);
  spec.hi = Vector::Constant(1, 1.0);
  spec.t_max = settings.t_max;
  spec.diffusion = [](const Vector&) { return Matrix::Identity(1, 1); };
  spec.drift = [](const Vector&) { return Vector::Zero(1); };
  spec.potential = [](const Vector& th, const Vector&) { return th[0] * th[0]; };
  spec.potential_grad = [](const Vector& th, const Vector&) {
    return Vector::Constant(1, 2.0 * th[0]);
  };
  spec.boundary = [](const Vector& th, double, const Vector& x) { return 1.0 + th[0] * x[0]; };
  spec.boundary_grad = [](const Vector&, double, const Vector& x) {
    return Vector::Constant(1, x[0]);
  };
  spec.source = [f = std::move(field)](const Vector& x) { return f(x[0]); };
  spec.obs_times = settings.obs_times();
  spec.lambda_min = 1.0;
  spec.lambda_max = 1.0;
  return spec;
}

ParabolicMomentModel::ParabolicMomentModel(ParabolicSettings settings, const RandomStream& stream)
    : settings_(settings), stream_(stream), times_(settings.obs_times()),
      basis_(settings.p - 1, 1.0) {
  fields_.resize(settings_.n_fields);
  parallel_for(settings_.n_fields, [&](long k) {
    fields_[k] = sample_field_1d(stream_.substream(2 * k), settings_.field_grid);
  });
}

const ParabolicMomentModel::Cached& ParabolicMomentModel::eval(const Vector& theta,
                                                               int time_index) const {
  if (time_index < 0) throw DimensionError("ParabolicMomentModel: negative index");
  time_index %= static_cast<int>(times_.size());
  const std::pair<std::vector<double>, int> key{{theta.begin(), theta.end()}, time_index};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  auto cached = std::make_shared<Cached>();
  cached->etas.resize(settings_.n_fields);
  parallel_for(settings_.n_fields, [&](long k) {
    ParabolicSpec spec = reference_parabolic_spec(settings_, fields_[k]);
    cached->etas[k] = eta_pair_parabolic(
        spec, theta, time_index, basis_, settings_.p, settings_.quad_grid,
        settings_.paths_per_node, settings_.dt,
        stream_.substream(2 * k + 1).substream(static_cast<std::uint64_t>(time_index)),
        settings_.step_cap);
  });
  const int p = settings_.p;
  const int n = settings_.n_fields;
  Vector mu = Vector::Zero(p);
  Vector dmu = Vector::Zero(p);
  for (const auto& e : cached->etas) {
    mu += e.eta;
    dmu += e.deta.col(0);
  }
  mu /= n;
  dmu /= n;
  Matrix cov = Matrix::Zero(p, p);
  Matrix dcov = Matrix::Zero(p, p);
  for (const auto& e : cached->etas) {
    const Vector r = e.eta - mu;
    const Vector dr = e.deta.col(0) - dmu;
    cov += r * r.transpose();
    dcov += dr * r.transpose() + r * dr.transpose();
  }
  cov /= n - 1;
  dcov /= n - 1;
  cached->mp.mean = mu;
  cached->mp.cov = 0.5 * (cov + cov.transpose()) + settings_.lambda();
  cached->dm.dmean = {dmu};
  cached->dm.dcov = {0.5 * (dcov + dcov.transpose())};
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = cache_.emplace(key, std::move(cached));
  return *it->second;
}

MomentPair ParabolicMomentModel::moments(const Vector& theta, int index) const {
  return eval(theta, index).mp;
}

MomentDerivs ParabolicMomentModel::dmoments(const Vector& theta, int index) const {
  return eval(theta, index).dm;
}

ParabolicGenerator::ParabolicGenerator(ParabolicSettings settings, const RandomStream&)
    : settings_(settings), times_(settings.obs_times()), lambda_(settings.lambda()),
      basis_(settings.p - 1, 1.0) {}

Vector ParabolicGenerator::latent_eta(const Vector& theta0, int index, Rng& rng) const {
  // A stream derived from the caller's rng keys the field and path draws, so
  // the eta pipeline matches the moment model's discretization while staying
  // deterministic in the batch stream.
  const RandomStream si{rng.next_u64(), rng.next_u64()};
  const Field1D field = sample_field_1d(si.substream(0), settings_.field_grid);
  ParabolicSpec spec = reference_parabolic_spec(settings_, field);
  const int ti = index % static_cast<int>(times_.size());
  return eta_coeffs_parabolic(spec, theta0, ti, basis_, settings_.p, settings_.quad_grid,
                              settings_.paths_per_node, settings_.dt, si.substream(1));
}

const Matrix& ParabolicGenerator::noise_cov(int) const { return lambda_; }

}  // namespace hbvm
