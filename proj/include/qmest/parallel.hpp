#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qmest {

namespace detail {
inline std::atomic<unsigned> default_threads_override{0};
}

/// Replace the hardware worker count reported by default_threads(); 0 restores
/// it. Lets tests exercise multi-worker schedules on small machines.
inline void set_default_threads(unsigned n) { detail::default_threads_override.store(n); }

/// Number of workers to use when the caller passes 0.
inline unsigned default_threads() {
    if (const unsigned n = detail::default_threads_override.load()) return n;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Run body(i) for i in [0, count) on up to `threads` workers. Work is
/// handed out dynamically; callers write results into slot i so the outcome
/// never depends on scheduling. The first exception is rethrown.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(count);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace qmest
