#include "tdoa/parallel.hpp"

#include <cstdlib>

namespace tdoa {

int default_thread_count() {
  if (const char* env = std::getenv("TDOA_PLACER_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

}  // namespace tdoa
