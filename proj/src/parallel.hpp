#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace evs::detail {

// Splits [0, n) into contiguous blocks, evaluates fn(begin, end) for each on
// up to `threads` workers and returns the per-block results in block order.
// Callers merge with an associative operation, so output does not depend on
// the worker count.
template <class Result, class Fn>
std::vector<Result> run_blocks(std::uint64_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1U, threads);
  const std::uint64_t blocks =
      std::max<std::uint64_t>(1, std::min<std::uint64_t>(n, std::uint64_t{threads} * 4));
  std::vector<Result> results(blocks);
  auto bounds = [&](std::uint64_t b) { return n / blocks * b + std::min(b, n % blocks); };
  if (threads == 1 || blocks == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) results[b] = fn(bounds(b), bounds(b + 1));
    return results;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::uint64_t b = w; b < blocks; b += threads) results[b] = fn(bounds(b), bounds(b + 1));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace evs::detail
