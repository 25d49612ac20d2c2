#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace renewal {

// Philox4x32-10 block function. Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Counter-based random stream keyed by (seed, stream_id). The i-th block of
// a stream is philox(counter = {i, stream_id}, key = seed), so streams with
// different ids never overlap and every draw sequence is reproducible.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next_u64(); }

    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double exponential(double rate = 1.0);
    double normal();
    bool bernoulli(double p) { return uniform() < p; }
    // Number of trials up to and including the first success.
    std::uint64_t geometric(double p);

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;  // 32-bit words consumed from buffer_
};

}  // namespace renewal
