#pragma once

#include <omp.h>

#include <algorithm>
#include <cstddef>
#include <exception>
#include <span>
#include <vector>

namespace cmi::nn {

// Calls `fn(i, grad_buffer)` for i in [0, count) across OpenMP threads. Each
// thread accumulates into its own buffer (thread 0 uses `grads` directly);
// buffers are folded into `grads` in thread order afterwards, so the sum is
// deterministic for a fixed thread count. Returns the sum of fn's results.
template <class Fn>
double AccumulateGradients(std::size_t count, std::span<float> grads, Fn&& fn) {
  std::vector<double> values(count, 0.0);
  const int threads =
      std::max(1, std::min(omp_get_max_threads(), static_cast<int>(std::max<std::size_t>(count, 1))));
  std::vector<std::vector<float>> extra(static_cast<std::size_t>(threads - 1));
  std::exception_ptr failure;
#pragma omp parallel num_threads(threads)
  {
    const int t = omp_get_thread_num();
    float* g = grads.data();
    if (t > 0) {
      extra[t - 1].assign(grads.size(), 0.0f);
      g = extra[t - 1].data();
    }
#pragma omp for schedule(static)
    for (long i = 0; i < static_cast<long>(count); ++i) {
      try {
        values[i] = fn(static_cast<std::size_t>(i), g);
      } catch (...) {
#pragma omp critical(cmi_accumulate_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& e : extra)
    for (std::size_t j = 0; j < e.size(); ++j) grads[j] += e[j];
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

// Parallel map over [0, count); results land in index order.
template <class T, class Fn>
std::vector<T> ParallelMap(std::size_t count, Fn&& fn) {
  std::vector<T> out(count);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < static_cast<long>(count); ++i) {
    try {
      out[i] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(cmi_map_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace cmi::nn
