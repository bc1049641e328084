#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fsa {

// Output mixer used for seeding and stream derivation (Vigna's splitmix64).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// A labeled sub-seed of a root seed, for drivers that need their own private
// (root, index) stream family without colliding with the caller's streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t label) {
    std::uint64_t s = root + label * 0x9E3779B97F4A7C15ull;
    return splitmix64_next(s);
}

// xoshiro256++ with explicit, documented draw semantics.
//
// All randomness in the library flows through this class so that the
// consumption order is under our control: a run is reproducible from its
// seed alone, and replication r of any multi-replication driver uses the
// derived stream Rng::stream(seed, r), never a shared generator.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64_next(s);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    // Derived stream `index` of a root seed.  Distinct indices give streams
    // that are independent for every practical purpose (full 64-bit mixing
    // of both inputs before seeding).
    static Rng stream(std::uint64_t root_seed, std::uint64_t index) {
        std::uint64_t a = root_seed;
        std::uint64_t b = index + 0x9E3779B97F4A7C15ull;
        return Rng(splitmix64_next(a) ^ splitmix64_next(b));
    }

    std::uint64_t next_u64() {
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

    // Uniform on [0,1), 53-bit resolution. One u64 per call.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller.  Pairs are generated from two uniforms;
    // the second member is cached, so consumption is two u64 per two normals.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // u1 in (0,1] keeps the log finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace fsa
