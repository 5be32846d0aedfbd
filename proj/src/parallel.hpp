#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nmetro::detail {

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, count) into contiguous chunks, runs body(chunk, begin, end) on
/// each, and rethrows the first failure. Chunk c always covers the same range
/// for a given (count, chunks) pair.
template <typename Body>
void parallel_chunks(std::size_t count, unsigned workers, Body&& body) {
  const std::size_t chunks =
      std::max<std::size_t>(1, std::min<std::size_t>(workers, count));
  std::vector<std::exception_ptr> failures(chunks);
  auto run = [&](std::size_t c) {
    const std::size_t begin = count * c / chunks;
    const std::size_t end = count * (c + 1) / chunks;
    try {
      body(c, begin, end);
    } catch (...) {
      failures[c] = std::current_exception();
    }
  };
  if (chunks == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) threads.emplace_back(run, c);
    for (auto& t : threads) t.join();
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace nmetro::detail
