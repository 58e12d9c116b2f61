#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace prep {

// Runs fn(i) for i in [0, count) on `workers` threads. Work items must write
// only to their own output slots; results are then independent of scheduling,
// which is what the byte-determinism contracts rely on. The first exception
// is rethrown after all workers join.
inline void parallel_for(size_t count, int workers, const std::function<void(size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mx;
    auto body = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mx);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    int n = std::min<size_t>(size_t(workers), count);
    for (int t = 0; t < n; ++t) threads.emplace_back(body);
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace prep
