#include "hbvm/prior.hpp"

#include <cmath>
#include <limits>

namespace hbvm {

PriorSpec PriorSpec::uniform(Vector lo, Vector hi) {
  if (lo.size() != hi.size() || lo.size() == 0) throw DimensionError("PriorSpec: bad box");
  double vol = 1.0;
  for (int a = 0; a < lo.size(); ++a) {
    if (!(hi[a] > lo[a])) throw DimensionError("PriorSpec: empty box axis");
    vol *= hi[a] - lo[a];
  }
  PriorSpec p;
  p.uniform_ = true;
  p.lo_ = std::move(lo);
  p.hi_ = std::move(hi);
  p.uniform_density_ = 1.0 / vol;
  return p;
}

PriorSpec PriorSpec::tabulated(GridSpec grid, Vector values) {
  if (values.size() != grid.size()) throw DimensionError("PriorSpec: table size mismatch");
  if (values.minCoeff() < 0) throw NumericalError("PriorSpec: negative density value");
  PriorSpec p;
  p.uniform_ = false;
  p.lo_ = grid.lo;
  p.hi_ = grid.hi;
  // normalize by trapezoid quadrature so the table integrates to one
  double mass = 0.0;
  for (long k = 0; k < grid.size(); ++k) {
    double w = grid.cell_volume();
    long rem = k;
    for (int a = grid.dim() - 1; a >= 0; --a) {
      const long idx = rem % grid.counts[a];
      rem /= grid.counts[a];
      if (grid.counts[a] > 1 && (idx == 0 || idx == grid.counts[a] - 1)) w *= 0.5;
    }
    mass += w * values[k];
  }
  if (!(mass > 0)) throw NumericalError("PriorSpec: table has zero mass");
  p.table_grid_ = std::move(grid);
  p.table_ = values / mass;
  return p;
}

bool PriorSpec::inside(const Vector& theta) const {
  for (int a = 0; a < lo_.size(); ++a)
    if (theta[a] < lo_[a] || theta[a] > hi_[a]) return false;
  return true;
}

double PriorSpec::density(const Vector& theta) const {
  if (theta.size() != lo_.size()) throw DimensionError("PriorSpec: dimension mismatch");
  if (!inside(theta)) return 0.0;
  if (uniform_) return uniform_density_;
  // multilinear interpolation on the table lattice
  const int d = table_grid_.dim();
  std::vector<long> base(d);
  std::vector<double> frac(d);
  for (int a = 0; a < d; ++a) {
    if (table_grid_.counts[a] <= 1) {
      base[a] = 0;
      frac[a] = 0.0;
      continue;
    }
    const double u = (theta[a] - lo_[a]) / table_grid_.step(a);
    long k = static_cast<long>(std::floor(u));
    k = std::max<long>(0, std::min<long>(table_grid_.counts[a] - 2, k));
    base[a] = k;
    frac[a] = u - k;
  }
  double val = 0.0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    long flat = 0;
    for (int a = 0; a < d; ++a) {
      const int bit = (c >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      long idx = base[a] + bit;
      idx = std::min<long>(idx, table_grid_.counts[a] - 1);
      flat = flat * table_grid_.counts[a] + idx;
    }
    val += w * table_[flat];
  }
  return val;
}

double PriorSpec::log_density(const Vector& theta) const {
  const double d = density(theta);
  return d > 0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

double PriorSpec::quadrature_mass(const std::vector<int>& counts) const {
  GridSpec g(lo_, hi_, counts);
  double mass = 0.0;
  for (long k = 0; k < g.size(); ++k) {
    double w = g.cell_volume();
    long rem = k;
    for (int a = g.dim() - 1; a >= 0; --a) {
      const long idx = rem % g.counts[a];
      rem /= g.counts[a];
      if (g.counts[a] > 1 && (idx == 0 || idx == g.counts[a] - 1)) w *= 0.5;
    }
    mass += w * density(g.node(k));
  }
  return mass;
}

}  // namespace hbvm
