#pragma once

// Replica fan-out over a small worker pool. Results are stored by replica
// index, so anything reduced afterwards in index order is independent of
// the number of workers.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "fraglab/rng.hpp"

namespace fraglab {

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Runs body(workspace, replica, rng) for replica = 0..count-1 and returns the
/// results in replica order. Each worker owns one workspace built by make_ws.
template <class MakeWorkspace, class Body>
auto run_replicas(std::size_t count, unsigned threads, StreamKey key, MakeWorkspace make_ws, Body body) {
  using Workspace = decltype(make_ws());
  using Result = decltype(body(std::declval<Workspace&>(), std::size_t{}, std::declval<Engine&>()));
  std::vector<Result> results(count);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      Workspace ws = make_ws();
      for (std::size_t r = next.fetch_add(1); r < count; r = next.fetch_add(1)) {
        Engine rng = make_engine(key.seed, key.stream, r);
        results[r] = body(ws, r, rng);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(count);
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

struct NoWorkspace {};

template <class Body>
auto run_replicas(std::size_t count, unsigned threads, StreamKey key, Body body) {
  return run_replicas(count, threads, key, [] { return NoWorkspace{}; },
                      [&](NoWorkspace&, std::size_t r, Engine& rng) { return body(r, rng); });
}

}  // namespace fraglab
