#pragma once

#include <cmath>
#include <cstdint>

namespace dpair {

/// splitmix64. Small, fast, and fully specified, so seeded runs are
/// bit-identical across platforms and standard library versions.
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no per-stream cache; two uniforms per
    /// sample keeps the stream layout obvious).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

/// Derive an independent child stream from (seed, label), e.g. one stream
/// per rendered frame so frames can be generated in any order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
    SplitMix64 s(seed ^ (0x632be59bd9b4e019ull * (label + 1)));
    s.next();
    return s.next();
}

}  // namespace dpair
