#pragma once

#include <cstddef>
#include <functional>

namespace hypermass {

// Worker count: HYPERMASS_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

// Deterministic static partition of [0, n); body(i) must only write slot i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hypermass
