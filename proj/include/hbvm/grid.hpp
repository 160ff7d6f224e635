#ifndef HBVM_GRID_HPP
#define HBVM_GRID_HPP

#include <vector>

#include "hbvm/types.hpp"

namespace hbvm {

// Regular lattice over an axis-aligned box, endpoints inclusive. Nodes are
// enumerated row-major over the axes (last axis fastest).
struct GridSpec {
  Vector lo;
  Vector hi;
  std::vector<int> counts;

  GridSpec() = default;
  GridSpec(Vector lo_, Vector hi_, std::vector<int> counts_);

  int dim() const { return static_cast<int>(counts.size()); }
  long size() const;
  double step(int axis) const;
  double cell_volume() const;
  Vector node(long flat) const;
  // Flat index of the lattice node nearest to x (clamped to the box).
  long nearest(const Vector& x) const;
};

}  // namespace hbvm

#endif
