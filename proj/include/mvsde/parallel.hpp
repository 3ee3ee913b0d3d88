#pragma once

#include <thread>
#include <vector>

namespace mvsde {

// Static block partition over [0, n). Results must not depend on the worker
// count, so callers may only write to per-index slots inside fn; reductions
// happen afterwards in index order.
template <typename Fn>
void parallel_for(long n, int workers, Fn&& fn) {
    if (n <= 0) return;
    if (workers <= 1 || n < 2 * workers) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    const long block = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const long lo = w * block;
        const long hi = std::min(n, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace mvsde
