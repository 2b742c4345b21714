#pragma once

#include <cstdint>
#include <random>

namespace reflex {

// Single deterministic random source. All randomness in a simulation flows
// from one engine-owned instance so a run is a pure function of its seed.
// Uniform draws are derived from raw mt19937_64 output instead of
// std::uniform_real_distribution, whose algorithm is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Uniform index in [0, n); n must be positive.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(unit() * static_cast<double>(n));
    }

private:
    std::mt19937_64 gen_;
};

} // namespace reflex
