#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace icp {

/// Runs fn(0) .. fn(count-1) on up to `jobs` threads (0 = hardware
/// concurrency). Results must be written to per-index slots by the caller;
/// the lowest-index exception, if any, is rethrown on the calling thread,
/// so the surfaced error does not depend on scheduling.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    std::size_t n_threads = jobs <= 0 ? std::thread::hardware_concurrency()
                                      : static_cast<std::size_t>(jobs);
    if (n_threads == 0) n_threads = 1;
    if (n_threads > count) n_threads = count;

    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace icp
