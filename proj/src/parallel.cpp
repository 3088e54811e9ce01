#include "sci/parallel.hpp"

namespace sci {
namespace {
std::atomic<unsigned> g_thread_limit{0};
}

void set_thread_limit(unsigned n) noexcept { g_thread_limit.store(n); }

unsigned thread_limit() noexcept {
  const unsigned n = g_thread_limit.load();
  if (n != 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace sci
