#pragma once

#include <cstdint>
#include <vector>

#include "legopet/array.hpp"

namespace legopet::tomo {

struct Ellipse {
    double cx, cy;       // center, pixel coordinates
    double a, b;         // semi-axes, pixels
    double phi_deg;      // rotation
    double value;        // intensity painted inside
    const char* kind;    // "skull" | "tissue" | "lesion"
};

/// 2D nonnegative activity map plus the descriptors it was built from.
struct Phantom {
    Array2D pixels;
    uint64_t seed = 0;
    int complexity = 0;
    std::vector<Ellipse> components;
};

/// Deterministic procedural "brain-like" ellipse composite: an outer skull
/// ellipse, `complexity` interior tissue regions of distinct intensities and
/// a few small high-contrast lesions. Background outside the outer ellipse is
/// exactly zero and the whole image stays within a centered disk, so corner
/// pixels are always zero.
Phantom generate_phantom(uint64_t seed, int size, int complexity);

}  // namespace legopet::tomo
