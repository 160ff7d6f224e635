#ifndef HBVM_PARABOLIC_HPP
#define HBVM_PARABOLIC_HPP

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "hbvm/model.hpp"
#include "hbvm/random.hpp"
#include "hbvm/square_integral.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

// Positive field on [0,1] sampled on a uniform grid, linear between nodes.
struct Field1D {
  Vector values;
  double operator()(double x) const;
};

// exp(B(x)) for a Brownian motion B on [0,1].
Field1D sample_field_1d(const RandomStream& stream, int grid_n);
Field1D constant_field_1d(int grid_n, double value);

// Problem data for -du/dt + A u = f with A v = -(1/2) tr(a D^2 v) - <b, Dv>
// + c_theta v, Dirichlet/terminal data g_theta. Uniformly elliptic a only.
struct ParabolicSpec {
  int dim = 1;
  Vector lo, hi;       // open box domain
  double t_max = 0.5;
  std::function<Matrix(const Vector&)> diffusion;                     // a(x)
  std::function<Vector(const Vector&)> drift;                         // b(x)
  std::function<double(const Vector&, const Vector&)> potential;      // c_theta(x)
  std::function<Vector(const Vector&, const Vector&)> potential_grad; // dc/dtheta
  std::function<double(const Vector&, double, const Vector&)> boundary;        // g_theta(t,x)
  std::function<Vector(const Vector&, double, const Vector&)> boundary_grad;
  std::function<double(const Vector&)> source;                        // f(x)
  std::vector<double> obs_times;
  double lambda_min = 1.0, lambda_max = 1.0;  // declared ellipticity bounds

  void validate() const;
};

enum class ExitFlag { boundary, terminal };

struct DiffusionPath {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vector> states;
  ExitFlag exit_flag = ExitFlag::terminal;
  double exit_time = 0.0;
  Vector exit_point;
};

// X_{k+1} = X_k + b dt + sigma sqrt(dt) xi with sigma sigma' = a(X_k) (SPD
// factorization, eigenvalue square root); stops at the first box exit or at
// t_max, exit point interpolated along the crossing step.
DiffusionPath euler_maruyama_path(const Vector& x0, double t0, const ParabolicSpec& spec,
                                  double dt, const RandomStream& stream);

// Feynman-Kac value of the parabolic problem at (t, x0): discounted boundary/
// terminal payoff plus the discounted running source, both by the
// left-endpoint rule along Euler-Maruyama paths.
McScalar fk_parabolic(double t, const Vector& x0, const ParabolicSpec& spec, const Vector& theta,
                      int n_paths, double dt, const RandomStream& stream,
                      long step_cap = 10000000);

// Value and theta-gradient on common paths. The gradient has payoff-,
// discount- (via -int dc/dtheta) and source-discount channels.
struct FkParabolicEstimate {
  double u = 0.0;
  Vector du;
  double u_se = 0.0;
  long n_samples = 0;
};
FkParabolicEstimate fk_parabolic_and_grad(double t, const Vector& x0, const ParabolicSpec& spec,
                                          const Vector& theta, int n_paths, double dt,
                                          const RandomStream& stream, int d,
                                          long step_cap = 10000000);

// u_theta(t_i, .) projected on the first p Legendre elements of the 1-D
// domain (quad_m interior nodes + exact boundary values, trapezoid rule).
Vector eta_coeffs_parabolic(const ParabolicSpec& spec, const Vector& theta, int time_index,
                            const LegendreBasis& basis, int p, int quad_m, int n_paths,
                            double dt, const RandomStream& stream);

struct ParabolicSettings {
  int field_grid = 100;
  double dt = 1e-3;
  int paths_per_node = 200;
  int quad_grid = 15;  // interior nodes
  int n_fields = 50;
  int p = 3;
  double t_max = 0.5;
  int t_points = 3;
  double lambda_scale = 0.01;
  long step_cap = 10000000;

  Matrix lambda() const { return lambda_scale * Matrix::Identity(p, p); }
  std::vector<double> obs_times() const;
};

// Reference instance: domain (0,1), a = 1, b = 0, c_theta = theta^2,
// g_theta(t,x) = 1 + theta x, source = supplied field.
ParabolicSpec reference_parabolic_spec(const ParabolicSettings& settings, Field1D field);

// Non-i.i.d. MC-moment model over the observation times, common random
// numbers across theta; source fields drawn from exp(B).
class ParabolicMomentModel : public MomentModel {
 public:
  struct EtaPair {
    Vector eta;
    Matrix deta;
  };

  ParabolicMomentModel(ParabolicSettings settings, const RandomStream& stream);
  int param_dim() const override { return 1; }
  int obs_dim() const override { return settings_.p; }
  MomentPair moments(const Vector& theta, int index) const override;
  MomentDerivs dmoments(const Vector& theta, int index) const override;
  bool iid() const override { return false; }
  const ParabolicSettings& settings() const { return settings_; }
  int n_times() const { return static_cast<int>(times_.size()); }

 private:
  struct Cached {
    std::vector<EtaPair> etas;  // per field
    MomentPair mp;
    MomentDerivs dm;
  };

  const Cached& eval(const Vector& theta, int time_index) const;

  ParabolicSettings settings_;
  RandomStream stream_;
  std::vector<double> times_;
  std::vector<Field1D> fields_;
  LegendreBasis basis_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<std::vector<double>, int>, std::shared_ptr<const Cached>> cache_;
};

// Data generator for the reference instance: fresh field per observation,
// observation i at time t_{i mod t_points}.
class ParabolicGenerator : public HierarchicalGenerator {
 public:
  ParabolicGenerator(ParabolicSettings settings, const RandomStream& unused = {});
  int obs_dim() const override { return settings_.p; }
  Vector latent_eta(const Vector& theta0, int index, Rng& rng) const override;
  const Matrix& noise_cov(int index) const override;

 private:
  ParabolicSettings settings_;
  std::vector<double> times_;
  Matrix lambda_;
  LegendreBasis basis_;
};

}  // namespace hbvm

#endif
