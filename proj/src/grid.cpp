#include "hbvm/grid.hpp"

#include <cmath>

namespace hbvm {

GridSpec::GridSpec(Vector lo_, Vector hi_, std::vector<int> counts_)
    : lo(std::move(lo_)), hi(std::move(hi_)), counts(std::move(counts_)) {
  if (lo.size() != hi.size() || static_cast<size_t>(lo.size()) != counts.size())
    throw GridError("GridSpec: inconsistent dimensions");
  for (size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] < 1) throw GridError("GridSpec: axis count must be >= 1");
    if (!(hi[a] >= lo[a])) throw GridError("GridSpec: hi < lo");
  }
}

long GridSpec::size() const {
  long s = 1;
  for (int c : counts) s *= c;
  return s;
}

double GridSpec::step(int axis) const {
  if (counts[axis] <= 1) return hi[axis] > lo[axis] ? hi[axis] - lo[axis] : 1.0;
  return (hi[axis] - lo[axis]) / (counts[axis] - 1);
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= step(a);
  return v;
}

Vector GridSpec::node(long flat) const {
  Vector x(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    const long c = counts[a];
    const long k = flat % c;
    flat /= c;
    x[a] = counts[a] <= 1 ? lo[a] : lo[a] + k * step(a);
  }
  return x;
}

long GridSpec::nearest(const Vector& x) const {
  long flat = 0;
  for (int a = 0; a < dim(); ++a) {
    long k = 0;
    if (counts[a] > 1) {
      k = std::lround((x[a] - lo[a]) / step(a));
      k = std::max<long>(0, std::min<long>(counts[a] - 1, k));
    }
    flat = flat * counts[a] + k;
  }
  return flat;
}

}  // namespace hbvm
