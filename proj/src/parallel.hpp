#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mvb::detail {

// Sample-level work is cut into chunks of a fixed size that does not depend
// on the thread count; callers keep one partial result per chunk and reduce
// them in chunk order, so results are bit-identical for any `threads`.
inline constexpr std::size_t kChunkSize = 256;

inline std::size_t chunk_count(std::size_t n) { return (n + kChunkSize - 1) / kChunkSize; }

// Calls fn(chunk, begin, end) for every chunk; chunk c runs on worker c % threads.
template <class Fn>
void for_each_chunk(std::size_t n, int threads, Fn&& fn) {
    const std::size_t chunks = chunk_count(n);
    if (chunks == 0) return;
    const auto workers =
        static_cast<std::size_t>(std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, chunks));
    auto run = [&](std::size_t w) {
        for (std::size_t c = w; c < chunks; c += workers) {
            fn(c, c * kChunkSize, std::min(n, (c + 1) * kChunkSize));
        }
    };
    if (workers <= 1) {
        run(0);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                run(w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    try {
        run(0);
    } catch (...) {
        errors[0] = std::current_exception();
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace mvb::detail
