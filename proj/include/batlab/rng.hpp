#pragma once

#include <cstdint>

namespace batlab {

/// splitmix64; used both as a standalone generator and to derive independent
/// per-sample streams (seed ^ index) so sampled results do not depend on the
/// worker count.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    /// uniform in [0,1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// uniform in [a,b)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull * (stream + 1)));
    return g.next();
}

}  // namespace batlab
