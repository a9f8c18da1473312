#pragma once

#include <cmath>
#include <cstdint>

namespace vsf {

/// Identifies one reproducible random stream. The same (master_seed, stream_id)
/// always yields the same deviate sequence; distinct stream_ids give streams
/// that are independent for Monte Carlo purposes, so replicate-parallel code
/// partitions stream ids instead of sharing a generator.
struct RngSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
};

namespace detail {

// SplitMix64 finalizer, used both as a mixer and to expand seeds into state.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// xoshiro256++ stream seeded from an RngSpec via SplitMix64 expansion.
/// Uniforms are built from the top 53 bits; normals use the Marsaglia polar
/// method (exact, rejection-based). Everything is sequential and
/// platform-independent given IEEE doubles.
class Rng {
public:
    explicit Rng(RngSpec spec) {
        std::uint64_t acc = detail::mix64(spec.master_seed) ^
                            detail::mix64(spec.stream_id + 0x632BE59BD9B4E019ULL);
        for (auto& word : state_) {
            acc = detail::mix64(acc);
            word = acc;
        }
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Standard normal deviate (polar method, spare cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace vsf
