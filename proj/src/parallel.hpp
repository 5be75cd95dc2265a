#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace qcbm::detail {

int configured_threads();

// Runs fn(begin, end) over a fixed per-thread split of [0, count). The split
// depends only on the configured thread count, never on timing, and small
// ranges stay on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    int threads = configured_threads();
    if (threads <= 1 || count < (std::size_t{1} << 15)) {
        fn(std::size_t{0}, count);
        return;
    }
    std::size_t chunk = (count + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) {
        std::size_t begin = chunk * static_cast<std::size_t>(t);
        if (begin >= count) break;
        std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    fn(std::size_t{0}, std::min(count, chunk));
    for (auto& th : pool) th.join();
}

// Chunked reduction: partials are combined in chunk-index order, so the
// result is deterministic for a fixed thread count.
template <typename T, typename Fn>
T parallel_sum(std::size_t count, Fn&& fn) {
    int threads = configured_threads();
    if (threads <= 1 || count < (std::size_t{1} << 15)) return fn(std::size_t{0}, count);
    std::size_t chunk = (count + threads - 1) / threads;
    std::vector<T> partials(static_cast<std::size_t>(threads), T{});
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) {
        std::size_t begin = chunk * static_cast<std::size_t>(t);
        if (begin >= count) break;
        std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&fn, &partials, t, begin, end] { partials[t] = fn(begin, end); });
    }
    partials[0] = fn(std::size_t{0}, std::min(count, chunk));
    for (auto& th : pool) th.join();
    T total{};
    for (const T& part : partials) total += part;
    return total;
}

} // namespace qcbm::detail
