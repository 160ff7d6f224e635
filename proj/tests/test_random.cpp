#include <doctest.h>

#include <cmath>
#include <vector>

#include "hbvm/random.hpp"

using namespace hbvm;

TEST_CASE("equal stream gives bit-identical sequences") {
  Rng a(RandomStream{42, 7});
  Rng b(RandomStream{42, 7});
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng c(RandomStream{42, 7});
  Rng d(RandomStream{42, 7});
  for (int i = 0; i < 100; ++i) {
    CHECK(c.normal() == d.normal());
  }
}

TEST_CASE("different stream ids give different sequences") {
  Rng a(RandomStream{42, 7});
  Rng b(RandomStream{42, 8});
  int equal = 0;
  for (int i = 0; i < 100; ++i)
    if (a.next_u64() == b.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("substreams are distinct and reproducible") {
  RandomStream base{1, 0};
  CHECK(base.substream(3).stream_id == base.substream(3).stream_id);
  CHECK(base.substream(3).stream_id != base.substream(4).stream_id);
  std::vector<std::uint64_t> ids;
  for (int k = 0; k < 1000; ++k) ids.push_back(base.substream(k).stream_id);
  std::sort(ids.begin(), ids.end());
  CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
}

TEST_CASE("normals have the right first moments") {
  Rng rng(RandomStream{11, 0});
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform01 stays in (0, 1]") {
  Rng rng(RandomStream{5, 5});
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}
