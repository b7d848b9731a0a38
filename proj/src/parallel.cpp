#include "polya/parallel.hpp"

namespace polya {

namespace {
std::atomic<unsigned> g_threads{0};
}  // namespace

void set_thread_count(unsigned threads) { g_threads = threads; }

unsigned thread_count() {
  const unsigned requested = g_threads.load();
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace polya
