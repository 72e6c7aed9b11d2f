#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace lilxing {

/// Runs body(state, i) for i in [0, n) split into contiguous blocks, one per
/// worker, each with its own State built by make_state(). Returns the
/// per-worker states in block order for the caller to merge.
///
/// Replicate i must draw only from its own stream (SeedRecord with index i)
/// so the merged result does not depend on the worker count.
template <typename MakeState, typename Body>
auto for_each_replicate(std::uint64_t n, int workers, MakeState make_state, Body body) {
  using State = decltype(make_state());
  const std::uint64_t w = std::max<std::uint64_t>(
      1, std::min<std::uint64_t>(std::uint64_t(std::max(workers, 1)), std::max<std::uint64_t>(n, 1)));
  std::vector<State> states;
  states.reserve(w);
  for (std::uint64_t k = 0; k < w; ++k) states.push_back(make_state());

  std::vector<std::exception_ptr> errors(w);
  auto run_block = [&](std::uint64_t k) {
    const std::uint64_t lo = n * k / w;
    const std::uint64_t hi = n * (k + 1) / w;
    try {
      for (std::uint64_t i = lo; i < hi; ++i) body(states[k], i);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  if (w == 1) {
    run_block(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::uint64_t k = 0; k < w; ++k) threads.emplace_back(run_block, k);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return states;
}

}  // namespace lilxing
