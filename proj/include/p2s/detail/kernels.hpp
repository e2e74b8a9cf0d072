#ifndef P2S_DETAIL_KERNELS_HPP
#define P2S_DETAIL_KERNELS_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace p2s::detail {

// Fixed-order reduction kernels. Every Gram entry, right-hand side and
// prediction in the pipeline goes through these, so results are bitwise
// reproducible run-to-run and independent of row chunking and thread count.

// Four-lane unrolled dot product, lanes folded in a fixed order at the end.
inline double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3));
}

inline double sum(std::span<const double> a) {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i];
    s1 += a[i + 1];
    s2 += a[i + 2];
    s3 += a[i + 3];
  }
  for (; i < n; ++i) s0 += a[i];
  return ((s0 + s1) + (s2 + s3));
}

// out[i] += alpha * x[i]; element-wise, so applying it to row chunks gives
// the same bits as applying it to the whole span.
inline void axpy(double alpha, std::span<const double> x,
                 std::span<double> out) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) out[i] += alpha * x[i];
}

// Centered Gram / moment helpers. One definition keeps the materialized
// design path and the sliced full-Gram path bit-identical.
inline double centered_gram_entry(double gram_ab, double sum_a, double sum_b,
                                  double inv_rows) {
  return gram_ab - sum_a * (sum_b * inv_rows);
}

// Runs fn(begin, end) over [0, count) split into at most `threads` blocks.
// Tasks must write disjoint outputs; the partition never affects values.
// The first exception thrown by a worker is rethrown on the calling thread.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    fn(0, count);
    return;
  }
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned t = 0; t < workers; ++t) {
    const std::size_t begin = static_cast<std::size_t>(t) * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, &errors, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace p2s::detail

#endif
