#pragma once

#include <cstddef>
#include <functional>

namespace xmodal {

// Worker count from XMODAL_THREADS, falling back to hardware concurrency.
std::size_t default_thread_count();

// Runs body(i) for i in [0, n) across up to `threads` workers. Each index is
// visited exactly once; callers must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t threads = default_thread_count());

}  // namespace xmodal
