#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ddpred {

/// Splittable counter-based pseudorandom generator (SplitMix64 core).
///
/// A stream is a 64-bit counter advanced by a fixed increment; outputs are a
/// bijective mix of the counter. split(key) derives an independent child
/// stream from the current state and the key without advancing the parent,
/// so the draws of one stream never depend on how sibling streams are
/// consumed. This is what makes Monte Carlo campaigns reproducible under
/// parallel execution: stream assignment is by index, not by draw order.
///
/// All floating-point outputs are built from integer bits and libm calls
/// only, so a given seed produces identical sequences on every run.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derives an independent child stream; the parent is not advanced.
    Rng split(std::uint64_t key) const {
        return Rng(mix(mix(state_ ^ 0x9E3779B97F4A7C15ull) + key));
    }

    /// Identifier of this stream (its current counter value).
    std::uint64_t stream_id() const { return state_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform on [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [lo, hi], inclusive, without modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = std::uint64_t(hi - lo) + 1;
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % span;
        std::uint64_t draw;
        do {
            draw = next_u64();
        } while (draw >= limit);
        return lo + std::int64_t(draw % span);
    }

    /// Standard normal draw (Box-Muller, second value cached).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ddpred
