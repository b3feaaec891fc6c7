#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

#include "surgforge/errors.hpp"

namespace surgforge {

/// Applies fn to every item with bounded parallelism; results keep input
/// order. fn must be safe to call concurrently and must not throw —
/// stage workers return failure values instead.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, int max_in_flight, Fn fn)
    -> std::vector<decltype(fn(items[0]))> {
    using Out = decltype(fn(items[0]));
    if (max_in_flight < 1) throw PolicyError("max_in_flight must be >= 1");
    std::vector<Out> results(items.size());
    if (items.empty()) return results;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            results[i] = fn(items[i]);
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(max_in_flight), items.size());
    if (n_threads == 1) {
        worker();
        return results;
    }
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return results;
}

}  // namespace surgforge
