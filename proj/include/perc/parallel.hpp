#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace perc {

// Worker count resolution: explicit argument > PERC_THREADS env > hardware.
// An argument of 0 means "use the default".
inline unsigned resolve_threads(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PERC_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

namespace detail {

// Joins workers and rethrows the first captured exception.
struct TaskErrors {
    std::mutex mtx;
    std::exception_ptr first;

    void capture() {
        std::lock_guard<std::mutex> lock(mtx);
        if (!first) first = std::current_exception();
    }
    void rethrow() {
        if (first) std::rethrow_exception(first);
    }
};

} // namespace detail

// Runs f(begin, end) over contiguous index ranges on up to `threads` workers.
// Each range is disjoint, so writes to per-index slots need no locking and
// results do not depend on scheduling.
template <typename F>
void parallel_ranges(std::size_t begin, std::size_t end, unsigned threads, F&& f) {
    const std::size_t total = end > begin ? end - begin : 0;
    unsigned t = resolve_threads(threads);
    if (t > total) t = total > 0 ? static_cast<unsigned>(total) : 1;
    if (t <= 1 || total == 0) {
        f(begin, end);
        return;
    }
    detail::TaskErrors errors;
    std::vector<std::thread> pool;
    pool.reserve(t);
    const std::size_t chunk = (total + t - 1) / t;
    for (unsigned w = 0; w < t; ++w) {
        std::size_t lo = begin + w * chunk;
        std::size_t hi = lo + chunk < end ? lo + chunk : end;
        if (lo >= hi) break;
        pool.emplace_back([&f, &errors, lo, hi] {
            try {
                f(lo, hi);
            } catch (...) {
                errors.capture();
            }
        });
    }
    for (auto& th : pool) th.join();
    errors.rethrow();
}

// Runs f(i) for i in [0, count) on up to `threads` workers, pulling indices
// from a shared counter. Each task owns output slot i, so aggregation is
// order-independent and deterministic.
template <typename F>
void parallel_tasks(std::size_t count, unsigned threads, F&& f) {
    unsigned t = resolve_threads(threads);
    if (t > count) t = count > 0 ? static_cast<unsigned>(count) : 1;
    if (t <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    detail::TaskErrors errors;
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned w = 0; w < t; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    f(i);
                } catch (...) {
                    errors.capture();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    errors.rethrow();
}

} // namespace perc
