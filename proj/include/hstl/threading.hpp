#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace hstl {

// Global worker-count knob (CLI --threads / HSTL_THREADS).
void set_threads(int n);
int threads();

// Runs fn(i) for i in [0, n). Work is partitioned into contiguous index
// ranges; every index is computed by exactly one invocation, so results
// are bit-identical for any thread count provided fn writes only to
// outputs owned by index i.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const int nt = threads();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(nt), n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hstl
