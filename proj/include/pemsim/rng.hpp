#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "pemsim/geometry.hpp"

namespace pemsim {

// splitmix64 finalizer. Used both to expand seeds and as the mixing step of
// the documented per-run seed derivation.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed for (cell, run) within an experiment matrix. Bit-exact contract:
//   s0 = splitmix64_mix(base_seed)
//   s1 = splitmix64_mix(s0 ^ (cell_index + 0x9E3779B97F4A7C15))
//   seed = splitmix64_mix(s1 ^ (run_index + 0xBF58476D1CE4E5B9))
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t cell_index,
                                 std::uint64_t run_index) {
    const std::uint64_t s0 = splitmix64_mix(base_seed);
    const std::uint64_t s1 = splitmix64_mix(s0 ^ (cell_index + 0x9E3779B97F4A7C15ULL));
    return splitmix64_mix(s1 ^ (run_index + 0xBF58476D1CE4E5B9ULL));
}

// xoshiro256++ with a draw counter. Each episode owns one stream; every
// uniform 64-bit draw increments the counter, which draw-accounting tests
// freeze to catch refactors that silently change RNG consumption.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9E3779B97F4A7C15ULL;
            word = splitmix64_mix(sm);
        }
    }

    std::uint64_t next_u64() {
        ++draw_count_;
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution. One draw.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi). One draw.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // True with probability p. One draw.
    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller, no caching: exactly two draws per call.
    double gaussian() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    // Poisson by CDF inversion: exactly one draw per call.
    int poisson(double rate) {
        if (rate <= 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-rate);
        double cum = p;
        int k = 0;
        while (u > cum && k < 1000) {
            ++k;
            p *= rate / static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    std::uint64_t draw_count() const { return draw_count_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
    std::uint64_t draw_count_ = 0;
};

}  // namespace pemsim
