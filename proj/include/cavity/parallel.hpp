#pragma once

#include <functional>

namespace cavity {

// Process-wide cap on worker threads; 0 means hardware concurrency.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n). Iterations must be independent. The first
// exception thrown by any iteration is rethrown after all workers finish.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace cavity
