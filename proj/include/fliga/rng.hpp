#pragma once

#include <cstdint>

namespace fliga {

/// splitmix64: 64-bit counter-based generator (Weyl sequence + finalizer).
/// Chosen over <random> engines because identical seeds must produce
/// identical streams on every platform, and the report header names the
/// generator so runs can be reproduced elsewhere.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    static constexpr const char* name() { return "splitmix64"; }

private:
    std::uint64_t state_;
};

} // namespace fliga
