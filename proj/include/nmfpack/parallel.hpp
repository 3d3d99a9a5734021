#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nmfpack {

inline std::atomic<unsigned>& thread_count_setting() {
    static std::atomic<unsigned> v{0}; // 0 means hardware concurrency
    return v;
}

inline void set_num_threads(unsigned n) { thread_count_setting().store(n); }

inline unsigned effective_threads() {
    const unsigned req = thread_count_setting().load();
    if (req > 0) return req;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs f(i) for i in [0, n). Each index owns its output slot, so results are
// identical to the sequential order regardless of the thread count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const unsigned threads = effective_threads();
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                f(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned use = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    pool.reserve(use);
    for (unsigned t = 0; t < use; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

} // namespace nmfpack
