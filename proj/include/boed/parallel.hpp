#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace boed {

// Runs body(worker, i) for i in [0, n). Indices are handed out in chunks;
// callers store results by index so the outcome does not depend on scheduling.
// The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::int64_t n, int jobs, Body&& body) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n < 2) {
        for (std::int64_t i = 0; i < n; ++i) body(0, i);
        return;
    }
    const std::int64_t chunk = std::max<std::int64_t>(1, n / (jobs * 16));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&](int w) {
        try {
            for (;;) {
                const std::int64_t start = next.fetch_add(chunk);
                if (start >= n) break;
                const std::int64_t stop = std::min(n, start + chunk);
                for (std::int64_t i = start; i < stop; ++i) body(w, i);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace boed
