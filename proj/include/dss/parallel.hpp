#ifndef DSS_PARALLEL_HPP
#define DSS_PARALLEL_HPP

#include <cstdlib>
#include <thread>
#include <vector>

namespace dss {

/// Worker count used by parallel_for. Defaults to the DSS_THREADS environment
/// variable, else 1; the CLI overrides it from --threads.
inline int& thread_count() {
  static int n = [] {
    if (const char* e = std::getenv("DSS_THREADS")) {
      const int v = std::atoi(e);
      if (v >= 1) return v;
    }
    return 1;
  }();
  return n;
}

/// Run f(i) for i in [0, n) on thread_count() workers. Indices are assigned
/// statically (worker w takes i = w, w + T, ...), so results land in
/// identical slots regardless of the worker count; with disjoint writes the
/// output is bytewise reproducible.
template <class F>
void parallel_for(int n, F&& f) {
  const int T = thread_count();
  if (T <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(T);
  for (int w = 0; w < T; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += T) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace dss

#endif
