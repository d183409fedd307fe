#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ssmlab {

// Index-space sweeps used by the verification suites. Every kernel is a
// pure function of its index, results land in a slot chosen by the index,
// and reductions run serially afterwards, so the parallel path produces
// bit-identical results under any thread count. The serial path is the
// reference implementation; tests compare the two.
enum class ExecMode { Serial, Parallel };

template <class R, class Fn>
std::vector<R> map_index_serial(uint64_t n, Fn&& fn) {
  std::vector<R> out;
  out.reserve(static_cast<size_t>(n));
  for (uint64_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

template <class R, class Fn>
std::vector<R> map_index_parallel(uint64_t n, Fn&& fn) {
#ifdef _OPENMP
  std::vector<R> out(static_cast<size_t>(n));
  const long long nn = (long long)n;
#pragma omp parallel for schedule(dynamic, 64)
  for (long long i = 0; i < nn; ++i) out[static_cast<size_t>(i)] = fn(uint64_t(i));
  return out;
#else
  return map_index_serial<R>(n, std::forward<Fn>(fn));
#endif
}

template <class R, class Fn>
std::vector<R> map_index(uint64_t n, Fn&& fn, ExecMode mode) {
  return mode == ExecMode::Parallel ? map_index_parallel<R>(n, std::forward<Fn>(fn))
                                    : map_index_serial<R>(n, std::forward<Fn>(fn));
}

// Counts indexes where fn(i) is false, recording up to `keep` of them.
// Used for pass/fail sweeps where a handful of witnesses is enough.
template <class Fn>
std::pair<uint64_t, std::vector<uint64_t>> count_failures(uint64_t n, Fn&& fn, ExecMode mode,
                                                          size_t keep = 8) {
  std::vector<char> ok = map_index<char>(n, [&](uint64_t i) { return char(fn(i) ? 1 : 0); }, mode);
  uint64_t failures = 0;
  std::vector<uint64_t> witnesses;
  for (uint64_t i = 0; i < n; ++i)
    if (!ok[static_cast<size_t>(i)]) {
      ++failures;
      if (witnesses.size() < keep) witnesses.push_back(i);
    }
  return {failures, witnesses};
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace ssmlab
