#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fakediff {

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over fixed batches of [0, n). Batches are claimed
/// dynamically, so bodies must only write to per-index disjoint storage. The
/// first exception thrown by any batch is rethrown on the caller's thread.
template <class Body>
void parallel_batches(std::size_t n, unsigned threads, std::size_t batch, Body&& body) {
    if (n == 0) return;
    batch = std::max<std::size_t>(batch, 1);
    const std::size_t n_batches = (n + batch - 1) / batch;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n_batches));

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_batches) return;
            try {
                body(b * batch, std::min(n, (b + 1) * batch));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n_batches);
                return;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
}

} // namespace fakediff
