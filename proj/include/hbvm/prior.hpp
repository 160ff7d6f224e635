#ifndef HBVM_PRIOR_HPP
#define HBVM_PRIOR_HPP

#include "hbvm/grid.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

// Prior density on an axis-aligned box: uniform, or tabulated values on a
// lattice with multilinear interpolation (normalized at construction).
class PriorSpec {
 public:
  static PriorSpec uniform(Vector lo, Vector hi);
  static PriorSpec tabulated(GridSpec grid, Vector values);

  double density(const Vector& theta) const;       // 0 outside the support
  double log_density(const Vector& theta) const;   // -inf outside
  bool inside(const Vector& theta) const;
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }

  // Trapezoid quadrature of the density over the support; should be 1.
  double quadrature_mass(const std::vector<int>& counts) const;

 private:
  PriorSpec() = default;
  bool uniform_ = true;
  Vector lo_, hi_;
  double uniform_density_ = 0.0;
  GridSpec table_grid_;
  Vector table_;  // normalized density values on table_grid_
};

}  // namespace hbvm

#endif
