#include "legopet/phantom.hpp"

#include <cmath>
#include <random>

#include "legopet/errors.hpp"
#include "legopet/rng.hpp"

namespace legopet::tomo {

namespace {

bool is_power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

bool inside(const Ellipse& e, double x, double y) {
    const double phi = e.phi_deg * M_PI / 180.0;
    const double c = std::cos(phi), s = std::sin(phi);
    const double dx = x - e.cx, dy = y - e.cy;
    const double u = (c * dx + s * dy) / e.a;
    const double v = (-s * dx + c * dy) / e.b;
    return u * u + v * v <= 1.0;
}

void paint(Array2D& img, const Ellipse& e, const Ellipse& clip) {
    for (int r = 0; r < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c)
            if (inside(e, c, r) && inside(clip, c, r)) img.at(r, c) = e.value;
}

}  // namespace

Phantom generate_phantom(uint64_t seed, int size, int complexity) {
    if (!is_power_of_two(size) || size < 32)
        throw ConfigError("generate_phantom: size must be a power of two >= 32, got " +
                          std::to_string(size));
    if (complexity < 1)
        throw ConfigError("generate_phantom: complexity must be >= 1");

    std::mt19937_64 g(seed);
    const double cx0 = (size - 1) / 2.0, cy0 = (size - 1) / 2.0;

    Phantom ph;
    ph.seed = seed;
    ph.complexity = complexity;
    ph.pixels = Array2D(size, size, 0.0);

    // outer skull ellipse, kept inside a centered disk of radius 0.47*size
    Ellipse skull;
    skull.cx = cx0 + uniform(g, -0.02, 0.02) * size;
    skull.cy = cy0 + uniform(g, -0.02, 0.02) * size;
    skull.a = uniform(g, 0.36, 0.44) * size;
    skull.b = uniform(g, 0.32, 0.40) * size;
    skull.phi_deg = uniform(g, -20.0, 20.0);
    skull.value = 0.55;
    skull.kind = "skull";
    paint(ph.pixels, skull, skull);
    ph.components.push_back(skull);

    // brain interior, slightly shrunk, darker base tissue
    Ellipse brain = skull;
    brain.a *= 0.88;
    brain.b *= 0.88;
    brain.value = 0.35;
    brain.kind = "tissue";
    paint(ph.pixels, brain, skull);
    ph.components.push_back(brain);

    // nested tissue regions of distinct intensity
    for (int i = 0; i < complexity; ++i) {
        Ellipse t;
        const double ang = uniform(g, 0.0, 2.0 * M_PI);
        const double rad = uniform(g, 0.0, 0.45);
        t.cx = brain.cx + rad * brain.a * std::cos(ang);
        t.cy = brain.cy + rad * brain.b * std::sin(ang);
        t.a = uniform(g, 0.12, 0.34) * brain.a;
        t.b = uniform(g, 0.12, 0.34) * brain.b;
        t.phi_deg = uniform(g, 0.0, 180.0);
        t.value = uniform(g, 0.15, 0.85);
        t.kind = "tissue";
        paint(ph.pixels, t, brain);
        ph.components.push_back(t);
    }

    // small high-contrast lesions
    const int n_lesions = 1 + complexity / 2;
    for (int i = 0; i < n_lesions; ++i) {
        Ellipse l;
        const double ang = uniform(g, 0.0, 2.0 * M_PI);
        const double rad = uniform(g, 0.1, 0.6);
        l.cx = brain.cx + rad * brain.a * std::cos(ang);
        l.cy = brain.cy + rad * brain.b * std::sin(ang);
        l.a = uniform(g, 0.02, 0.06) * size;
        l.b = uniform(g, 0.02, 0.06) * size;
        l.phi_deg = uniform(g, 0.0, 180.0);
        l.value = uniform(g, 0.9, 1.0);
        l.kind = "lesion";
        paint(ph.pixels, l, brain);
        ph.components.push_back(l);
    }

    return ph;
}

}  // namespace legopet::tomo
