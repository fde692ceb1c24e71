#pragma once

#include <cstdint>
#include <random>

namespace legopet {

/// splitmix64 step; used to derive independent child seeds from a root seed
/// so per-item streams do not depend on worker scheduling.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t root, uint64_t stream) {
    uint64_t s = root ^ (0x517cc1b727220a95ULL * (stream + 1));
    return splitmix64(s);
}

/// Uniform double in [0,1) from explicit integer draws (stdlib distributions
/// are implementation-defined; this one is pinned).
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

}  // namespace legopet
