#pragma once

#include <cstddef>
#include <functional>

namespace hairgs {

// 0 selects std::thread::hardware_concurrency().
void set_thread_count(unsigned count);
unsigned thread_count();

// Runs body(i) for i in [0, count). Iterations must write disjoint data; the
// result is then independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace hairgs
