#ifndef HBVM_PARALLEL_HPP
#define HBVM_PARALLEL_HPP

#include <functional>

namespace hbvm {

// 0 means use the hardware concurrency.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n). Each task must write only its own output slot
// and draw randomness from its own substream; reductions happen after the
// join in index order, so results are identical for any thread count.
void parallel_for(long n, const std::function<void(long)>& fn);

}  // namespace hbvm

#endif
