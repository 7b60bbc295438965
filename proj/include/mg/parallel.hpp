#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mg {

/**
 * Run fn(i) for i in [0, n) on up to `workers` threads.  Results land in
 * slot i, so downstream aggregation never depends on scheduling; jobs share
 * no mutable state.  The first exception is rethrown after all threads join.
 */
template <typename R>
std::vector<R> parallel_map(int n, int workers, const std::function<R(int)>& fn) {
    std::vector<R> out(static_cast<std::size_t>(n));
    if (n <= 0) return out;
    const int K = std::max(1, std::min(workers, n));
    if (K == 1) {
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;

    auto body = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                out[static_cast<std::size_t>(i)] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

}  // namespace mg
