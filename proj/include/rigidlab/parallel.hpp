// Minimal deterministic parallel-for.  Work items write into caller-owned
// slots indexed by item, so the result does not depend on the worker count;
// reductions are done sequentially by the caller afterwards.

#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace rigidlab {

inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t w = static_cast<std::size_t>(workers);
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += w) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline int default_workers() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace rigidlab
