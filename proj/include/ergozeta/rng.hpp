#pragma once

#include <cstdint>
#include <random>

namespace ergozeta {

/**
 * Deterministic uniform stream keyed by (seed, index).
 *
 * Each Monte-Carlo trial owns one stream; the key is expanded through
 * std::seed_seq into an mt19937_64 state. Both algorithms are fully
 * specified by the standard, so a given key yields the same bits on every
 * conforming implementation and the order in which trials are executed
 * never matters.
 */
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index) : engine_(make_engine(seed, index)) {}

    /// Uniform double strictly inside (0, 1), on the grid (k + 1/2) * 2^-53.
    double uniform_open() {
        const std::uint64_t bits = engine_() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [-bound, bound].
    std::int64_t uniform_int(std::int64_t bound) {
        const auto span = static_cast<std::uint64_t>(2 * bound + 1);
        return static_cast<std::int64_t>(engine_() % span) - bound;
    }

    std::uint64_t next_bits() { return engine_(); }

private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          0x45524730u};
        return std::mt19937_64(seq);
    }

    std::mt19937_64 engine_;
};

inline Stream trial_stream(std::uint64_t seed, std::uint64_t trial) { return Stream(seed, trial); }

}  // namespace ergozeta
