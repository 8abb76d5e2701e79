#pragma once

#include <array>
#include <cstdint>

namespace l1indep {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3").
//
// Every output is a pure function of (seed, stream, position), so replicate
// workers can each own a stream and produce identical numbers no matter how
// work is scheduled across threads. Streams of the same seed never overlap:
// the stream id occupies the high counter words, the block position the low
// ones.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // Uniform on [0, 1), 53 random bits, never returns 1.
    double next_uniform();

    // Unbiased uniform integer on [0, bound); bound must be positive.
    std::uint64_t next_below(std::uint64_t bound);

    // Standard normal by inverse-CDF transform of next_uniform(). Costs one
    // uniform per normal, which keeps stream accounting trivial.
    double next_normal();

    // Single-block evaluation, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                              const std::array<std::uint32_t, 2>& key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_ = 0;
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned pos_ = 4;
};

// Standard normal CDF.
double normal_cdf(double x);

// Inverse of normal_cdf on (0, 1). Wichura's algorithm AS 241 (PPND16),
// accurate to full double precision. Throws InvalidInput outside (0, 1).
double normal_quantile(double p);

} // namespace l1indep
