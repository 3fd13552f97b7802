#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pso_escape::detail {

inline std::size_t chunk_count(std::size_t n, unsigned jobs) {
  return std::max<std::size_t>(1, std::min<std::size_t>(jobs, n));
}

// Splits [0, n) into `jobs` contiguous chunks and runs fn(begin, end, chunk)
// on separate threads. Callers give each chunk its own accumulator.
template <class Fn>
void for_each_chunk(std::size_t n, unsigned jobs, Fn&& fn) {
  const std::size_t chunks = chunk_count(n, jobs);
  if (chunks == 1) {
    fn(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = n * c / chunks;
    const std::size_t end = n * (c + 1) / chunks;
    threads.emplace_back([&fn, begin, end, c] { fn(begin, end, c); });
  }
  for (auto& t : threads) t.join();
}

}  // namespace pso_escape::detail
