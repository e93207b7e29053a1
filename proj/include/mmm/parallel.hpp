// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mmm {

inline int default_jobs() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(worker, i) for i in [0, n) across at most `jobs` workers. Each index
// writes only its own output slot, so results are identical for any job
// count; reductions happen at the call site in index order. `worker` is a
// dense id in [0, jobs) for binding per-thread scratch.
inline void parallel_for_worker(size_t n, int jobs, const std::function<void(int, size_t)>& fn) {
    if (n == 0) return;
    jobs = std::max(1, jobs);
    const int nt = static_cast<int>(std::min<size_t>(static_cast<size_t>(jobs), n));
    if (nt == 1) {
        for (size_t i = 0; i < n; ++i) fn(0, i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&](int id) {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(id, i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
    parallel_for_worker(n, jobs, [&](int, size_t i) { fn(i); });
}

}  // namespace mmm
