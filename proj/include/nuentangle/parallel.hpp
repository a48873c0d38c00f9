#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace nuent {

/// Worker count for data-parallel regions. NU_ENTANGLE_THREADS caps it
/// (0 or unset = hardware concurrency).
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NU_ENTANGLE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 1024));
    }
    return hw;
}

/// Static-chunk parallel loop over [0, n). fn(begin, end) must only write to
/// index-addressed slots so the result is identical at any worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = worker_count();
    if (workers <= 1 || n < 2) {
        fn(std::size_t{0}, n);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t begin = static_cast<std::size_t>(w) * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

} // namespace nuent
