#ifndef HBVM_RANDOM_HPP
#define HBVM_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace hbvm {

// SplitMix64 finalizer, used to hash (seed, stream_id) pairs into engine state.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Addressable random stream: equal (seed, stream_id) gives bit-identical
// draws, distinct stream_ids give independently seeded engines. Substreams
// let batch-level Monte Carlo assign one stream per path/field/node so that
// results do not depend on worker count.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  RandomStream substream(std::uint64_t k) const {
    return {seed, splitmix64(stream_id ^ splitmix64(k + 0x632BE59BD9B4E019ULL))};
  }
};

class Rng {
 public:
  explicit Rng(const RandomStream& s) {
    std::uint64_t a = splitmix64(s.seed);
    std::uint64_t b = splitmix64(a ^ s.stream_id);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on (0, 1]; never returns 0 so log() stays finite.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
  }

  // Box-Muller, one value per call (exactly two uniforms consumed).
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hbvm

#endif
