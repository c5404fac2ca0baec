#include "embrec/parallel.hpp"

namespace embrec {
namespace {
std::atomic<std::size_t> g_workers{0};
}

void set_worker_count(std::size_t workers) { g_workers.store(workers); }

std::size_t worker_count() {
  const std::size_t requested = g_workers.load();
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace embrec
