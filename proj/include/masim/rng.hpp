#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "masim/types.hpp"

namespace masim {

// xoshiro256++ with splitmix64 stream derivation. Self-contained so that
// draws are bit-identical across compilers and standard libraries, which the
// reproducibility contract requires (std::normal_distribution is
// implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    // Derives an independent stream from (seed, path...). Used to give every
    // (snr_index, trial_index) pair its own generator so trial results do not
    // depend on scheduling order.
    static Rng stream(uint64_t seed, std::initializer_list<uint64_t> path) {
        uint64_t x = seed;
        for (uint64_t p : path) x = splitmix(x ^ (p + 0x9e3779b97f4a7c15ULL));
        Rng r(0);
        r.reseed_raw(x);
        return r;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0,1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0,1]; safe as a log() argument.
    double next_open_double() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n).
    uint64_t next_below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // N(0,1) via Box-Muller, pair cached.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(next_open_double()));
        const double t = 6.283185307179586476925287 * next_double();
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    // Circularly-symmetric CN(0,1): real and imaginary parts N(0,1/2).
    cxd next_cgaussian() {
        const double r = std::sqrt(-std::log(next_open_double()));
        const double t = 6.283185307179586476925287 * next_double();
        return {r * std::cos(t), r * std::sin(t)};
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    void reseed(uint64_t seed) { reseed_raw(splitmix(seed)); }

    void reseed_raw(uint64_t x) {
        for (auto& w : s_) {
            x = splitmix(x);
            w = x;
        }
        has_spare_ = false;
    }

    uint64_t s_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace masim
