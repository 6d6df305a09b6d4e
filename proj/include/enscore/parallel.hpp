#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace enscore {

// Runs fn(i) for i in [0, n) on `workers` threads. Indices are statically
// partitioned into contiguous chunks, so which thread handles an index never
// depends on timing. A worker stops at its first exception; after all threads
// join, the exception with the lowest index is rethrown.
template <typename Fn>
void parallel_for_static(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::vector<std::exception_ptr> errors(n);
    auto run_chunk = [&](std::size_t w) {
        const std::size_t begin = n * w / workers, end = n * (w + 1) / workers;
        for (std::size_t i = begin; i < end; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        run_chunk(0);
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run_chunk, w);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace enscore
