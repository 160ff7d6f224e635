#include "oracles.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace oracles {

Eigen::MatrixXd elliptic_fd(int n, const std::function<double(double, double)>& f,
                            const std::function<double(double, double)>& g) {
  const double h = 1.0 / (n - 1);
  const int m = n - 2;  // interior per axis
  auto id = [m](int i, int j) { return (i - 1) * m + (j - 1); };
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m * m);
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const double x = i * h, y = j * h;
      const int row = id(i, j);
      trip.emplace_back(row, row, -4.0 - 2.0 * f(x, y) * h * h);
      const int di[4] = {-1, 1, 0, 0};
      const int dj[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        const int ii = i + di[k], jj = j + dj[k];
        if (ii >= 1 && ii <= m && jj >= 1 && jj <= m) {
          trip.emplace_back(row, id(ii, jj), 1.0);
        } else {
          rhs[row] -= g(ii * h, jj * h);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> a(m * m, m * m);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
  const Eigen::VectorXd sol = lu.solve(rhs);
  Eigen::MatrixXd u(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == 0 || i == n - 1 || j == 0 || j == n - 1)
        u(i, j) = g(i * h, j * h);
      else
        u(i, j) = sol[id(i, j)];
    }
  return u;
}

double lattice_at(const Eigen::MatrixXd& u, double x, double y) {
  const int n = static_cast<int>(u.rows());
  const double cx = x * (n - 1), cy = y * (n - 1);
  int i = std::min(static_cast<int>(cx), n - 2);
  int j = std::min(static_cast<int>(cy), n - 2);
  const double fx = cx - i, fy = cy - j;
  return u(i, j) * (1 - fx) * (1 - fy) + u(i + 1, j) * fx * (1 - fy) +
         u(i, j + 1) * (1 - fx) * fy + u(i + 1, j + 1) * fx * fy;
}

Eigen::VectorXd parabolic_fd(int n_space, int n_time, double t_max, double t_eval,
                             const std::function<double(double)>& c,
                             const std::function<double(double)>& f,
                             const std::function<double(double, double)>& g) {
  const double h = 1.0 / (n_space - 1);
  const double dt = t_max / n_time;
  const int m = n_space - 2;
  // implicit Euler backward in time: (I + dt (c - (1/2) D2)) u_k = u_{k+1} + dt f
  Eigen::VectorXd u(n_space);
  for (int i = 0; i < n_space; ++i) u[i] = g(t_max, i * h);
  const double r = 0.5 * dt / (h * h);
  // tridiagonal Thomas solve per step
  std::vector<double> a(m), b(m), cc(m), d(m);
  double t = t_max;
  Eigen::VectorXd result = u;
  bool captured = t_eval >= t_max;
  for (int k = 0; k < n_time; ++k) {
    t -= dt;
    for (int i = 0; i < m; ++i) {
      const double x = (i + 1) * h;
      a[i] = -r;
      b[i] = 1.0 + 2.0 * r + dt * c(x);
      cc[i] = -r;
      d[i] = u[i + 1] + dt * f(x);
    }
    d[0] += r * g(t, 0.0);
    d[m - 1] += r * g(t, 1.0);
    for (int i = 1; i < m; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * cc[i - 1];
      d[i] -= w * d[i - 1];
    }
    std::vector<double> x(m);
    x[m - 1] = d[m - 1] / b[m - 1];
    for (int i = m - 2; i >= 0; --i) x[i] = (d[i] - cc[i] * x[i + 1]) / b[i];
    u[0] = g(t, 0.0);
    u[n_space - 1] = g(t, 1.0);
    for (int i = 0; i < m; ++i) u[i + 1] = x[i];
    if (!captured && t <= t_eval + 1e-12) {
      result = u;
      captured = true;
    }
  }
  if (!captured) result = u;
  return result;
}

double lattice_at_1d(const Eigen::VectorXd& u, double x) {
  const int n = static_cast<int>(u.size());
  const double cx = x * (n - 1);
  int i = std::min(static_cast<int>(cx), n - 2);
  const double fx = cx - i;
  return u[i] * (1 - fx) + u[i + 1] * fx;
}

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace oracles
