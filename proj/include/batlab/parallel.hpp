#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace batlab {

/// Global worker budget for parallel maps. Defaults to the hardware count;
/// the CLI overrides it from --threads / BLAB_THREADS.
int thread_budget();
void set_thread_budget(int n);

/// Static-partition parallel loop over [0, n). Each index writes only its own
/// slots, so results are independent of the worker count. Reductions are done
/// by the caller in index order.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
    if (n <= 0) return;
    int workers = std::max<int>(1, static_cast<int>(std::min<std::int64_t>(thread_budget(), n)));
    if (workers == 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::int64_t lo = w * chunk;
        std::int64_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

/// Kahan-compensated accumulator; used wherever long sums must be reproducible.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace batlab
