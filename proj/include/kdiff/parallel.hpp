#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace kdiff {

inline int worker_count() {
    if (const char* env = std::getenv("KDIFF_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

// Runs fn(i) for i in [0, n) across the worker pool.  fn must be safe to run
// concurrently for distinct indices.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace kdiff
