#ifndef LOCALKERNELS_PARALLEL_HPP
#define LOCALKERNELS_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace localkernels {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> count{0}; // 0 = use hardware concurrency
    return count;
}
} // namespace detail

/// Caps the number of worker threads used by parallel loops. 0 restores the default
/// (hardware concurrency). Results never depend on this setting.
inline void set_max_threads(int n) { detail::thread_count_slot().store(n < 0 ? 0 : n); }

inline int max_threads() {
    int n = detail::thread_count_slot().load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [begin, end). Each index is processed exactly once by exactly
/// one worker; fn must only write state owned by index i.
template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, Fn&& fn) {
    const std::int64_t count = end - begin;
    if (count <= 0) return;
    int workers = std::min<std::int64_t>(max_threads(), count);
    if (workers <= 1) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{begin};
    const std::int64_t chunk = std::max<std::int64_t>(1, count / (8 * workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::int64_t lo = next.fetch_add(chunk);
                if (lo >= end) return;
                std::int64_t hi = std::min(lo + chunk, end);
                for (std::int64_t i = lo; i < hi; ++i) fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace localkernels

#endif
