#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace jsmf {

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks, one per
// worker; with threads <= 1 the loop runs on the calling thread. Results must
// not depend on scheduling: fn may only write state owned by index i.
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(std::min<std::int64_t>(threads, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = n * w / workers;
        const std::int64_t hi = n * (w + 1) / workers;
        pool.emplace_back([lo, hi, &fn]() {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace jsmf
