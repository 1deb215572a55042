#pragma once

#include <cstddef>
#include <functional>

namespace qld {

// Global worker cap. Results never depend on it: every parallel_for body writes
// to its own preallocated slot and callers reduce in fixed index order.
int max_threads();
void set_max_threads(int n);

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  int threads_override = 0);

}  // namespace qld
