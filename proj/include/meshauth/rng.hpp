#pragma once

#include <cmath>
#include <cstdint>

namespace meshauth {

// Deterministic splittable PRNG. Every consumer derives its own stream from
// (seed, stream_id), so concurrent evaluators never share state and runs are
// reproducible across platforms. Core is splitmix64.
class Rng {
public:
    Rng() : state_(0) {}
    Rng(uint64_t seed, uint64_t stream_id) { state_ = mix(mix(seed) ^ mix(stream_id ^ 0x9e3779b97f4a7c15ULL)); }

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    // Uniform in [0,1). 53-bit resolution, platform independent.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool next_bit() { return (next_u64() >> 63) != 0; }

    // Unbiased integer in [0, bound) via rejection.
    uint64_t next_below(uint64_t bound) {
        uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller. No state caching: two uniforms per
    // draw, so the output stream depends only on the draw count.
    double next_gaussian() {
        double u1, u2;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    Rng split(uint64_t stream_id) const { return Rng(state_, stream_id); }

private:
    uint64_t state_;
};

}  // namespace meshauth
