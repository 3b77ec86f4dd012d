#include "hairgs/error.hpp"
#include "hairgs/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hairgs {

namespace {

void stderr_sink(const char* message, void*) { std::fprintf(stderr, "warning: %s\n", message); }

WarningSink g_sink = stderr_sink;
void* g_sink_user = nullptr;
std::atomic<unsigned> g_threads{0};

}  // namespace

void set_warning_sink(WarningSink sink, void* user) {
  g_sink = sink ? sink : stderr_sink;
  g_sink_user = user;
}

void warn(const std::string& message) { g_sink(message.c_str(), g_sink_user); }

void set_thread_count(unsigned count) { g_threads = count; }

unsigned thread_count() {
  unsigned n = g_threads.load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    try {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      next = count;
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hairgs
