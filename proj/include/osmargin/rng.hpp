#ifndef OSMARGIN_RNG_HPP
#define OSMARGIN_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace osm {

// Deterministic, platform-independent PRNG used by every seeded operation in
// the project: xoshiro256** with state expanded from the seed by SplitMix64.
// Streams derived with split() are independent of the draw position of the
// parent, so datasets can be generated per class / per example in any order
// (or in parallel) and still come out bit-identical.
//
// All derived quantities are fixed algorithms, not std::<distribution>s,
// because the standard library does not pin distribution algorithms across
// implementations:
//   uniform [0,1):   (x >> 11) * 2^-53
//   gaussian:        Box-Muller on two fresh uniforms (cosine branch only)
//   below(n):        rejection sampling on the top multiple of n
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {
        uint64_t s = seed;
        for (auto& word : state_) word = split_mix64(s);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; u1 is shifted into (0,1] so log(u1) is finite.
    double gaussian() {
        const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
    }

    // Uniform integer in [0, n); unbiased via rejection.
    uint64_t below(uint64_t n) {
        const uint64_t bound = UINT64_MAX - UINT64_MAX % n;
        uint64_t x = next();
        while (x >= bound) x = next();
        return x % n;
    }

    // Independent stream keyed by (original seed, stream index).
    Rng split(uint64_t stream) const {
        uint64_t h = seed_ ^ (0x9E3779B97F4A7C15ull * (stream + 1));
        return Rng(split_mix64(h));
    }

    uint64_t seed() const { return seed_; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t split_mix64(uint64_t& s) {
        uint64_t z = (s += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    static uint64_t split_mix64(uint64_t&& s) {
        uint64_t tmp = s;
        return split_mix64(tmp);
    }

    uint64_t seed_ = 0;
    std::array<uint64_t, 4> state_{};
};

}  // namespace osm

#endif
