// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace splat {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count). Work items must write to disjoint state;
// any reduction across items has to happen afterwards in index order so that
// results do not depend on the worker count.
inline void parallel_for(int count, int workers,
                         const std::function<void(int)>& fn) {
    workers = resolve_workers(workers);
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::mutex err_mutex;
    std::exception_ptr err;
    const int n_threads = std::min(workers, count);
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (int i = w; i < count; i += n_threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace splat
