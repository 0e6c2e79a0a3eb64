#pragma once

#include <cstdint>
#include <span>
#include <thread>
#include <vector>

namespace dpair {

/// Process-wide worker count used by parallel_for. 0 selects
/// hardware_concurrency. All parallel code in this library is written so
/// that results are bit-identical for any setting.
void set_thread_count(int n);
int thread_count();

/// Static block partition of [begin, end) over thread_count() workers.
/// `fn(i)` must be safe to run concurrently for distinct i and must not
/// depend on execution order.
template <typename F>
void parallel_for(std::int64_t begin, std::int64_t end, F&& fn) {
    const std::int64_t n = end - begin;
    if (n <= 0) return;
    int workers = thread_count();
    if (workers > n) workers = static_cast<int>(n);
    if (workers <= 1) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) {
        const std::int64_t lo = begin + w * chunk;
        const std::int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    const std::int64_t hi0 = std::min(end, begin + chunk);
    for (std::int64_t i = begin; i < hi0; ++i) fn(i);
    for (auto& t : pool) t.join();
}

/// Fixed-shape pairwise summation; the reduction tree depends only on the
/// length, so the result is independent of how the buffer was produced.
double pairwise_sum(std::span<const double> v);

}  // namespace dpair
