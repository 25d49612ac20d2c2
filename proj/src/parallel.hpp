#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace renewal::detail {

// Runs body(i) for i in [0, n) over contiguous blocks. Results must be written
// to per-index slots so the outcome does not depend on the thread count.
template <class Body>
void parallel_for(std::uint64_t n, unsigned threads, Body&& body) {
    const unsigned k = static_cast<unsigned>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(threads, n)));
    if (k <= 1) {
        for (std::uint64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < k; ++w) {
        pool.emplace_back([&, w] {
            const std::uint64_t lo = n * w / k, hi = n * (w + 1) / k;
            try {
                for (std::uint64_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace renewal::detail
