#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rim {

/// splitmix64 mixing step. Used to derive independent, order-free RNG
/// streams from (master_seed, path_index, substream) triples.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed for path `path_index` of a run with `master_seed`.
/// Each path owns a few substreams (Brownian increments, OU residuals,
/// bridge maxima) so operations can be re-run independently.
inline std::uint64_t derive_stream(std::uint64_t master_seed,
                                   std::uint64_t path_index,
                                   std::uint64_t substream) {
    return splitmix64(splitmix64(splitmix64(master_seed) + path_index) + substream);
}

/// Minimal counter-free xoshiro-style generator seeded via splitmix64.
/// We do not use std::normal_distribution: its output is
/// implementation-defined, which would break the bit-reproducibility
/// contract. Gaussians come from an explicit Box-Muller transform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // expand the seed into 4 words of state
        std::uint64_t x = seed;
        for (auto& w : state_) w = x = splitmix64(x);
    }

    std::uint64_t next_u64() {
        // xoshiro256++
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

    /// Uniform double in (0,1], 53-bit resolution. Never returns 0 so it
    /// is safe inside log().
    double next_uniform() {
        const std::uint64_t bits = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (pair cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace rim
