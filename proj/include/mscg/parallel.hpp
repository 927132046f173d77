#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace mscg {

// Runs job(0), ..., job(count-1) on up to `workers` threads. Each result is
// stored at its job index, so the output order is independent of scheduling.
// Jobs must not touch shared mutable state. If any job throws, the exception
// of the lowest-indexed failing job is rethrown after all threads join.
template <typename Job>
auto parallel_map(int count, int workers, Job&& job)
    -> std::vector<std::invoke_result_t<Job&, int>> {
  using Result = std::invoke_result_t<Job&, int>;
  std::vector<Result> results(static_cast<std::size_t>(std::max(count, 0)));
  if (count <= 0) return results;
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) results[static_cast<std::size_t>(i)] = job(i);
    return results;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto drain = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        results[static_cast<std::size_t>(i)] = job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) threads.emplace_back(drain);
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace mscg
