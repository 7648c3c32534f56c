/*
 * parallel.hpp
 *
 * Minimal fan-out over an index range. jobs <= 1 runs inline.
 */

#ifndef CERTABS_PARALLEL_HPP_
#define CERTABS_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace certabs {

/* fn(begin, end) is called on disjoint contiguous chunks */
template <class Fn>
void parallel_chunks(std::size_t count, unsigned jobs, Fn&& fn) {
  if (jobs <= 1 || count < 2) {
    fn(std::size_t{0}, count);
    return;
  }
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = (count + jobs - 1) / jobs;
  for (unsigned w = 0; w < jobs; ++w) {
    std::size_t b = w * chunk;
    std::size_t e = std::min(count, b + chunk);
    if (b >= e) break;
    workers.emplace_back([&, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

template <class Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  parallel_chunks(count, jobs, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) fn(i);
  });
}

}  // namespace certabs

#endif
