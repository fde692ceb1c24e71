#pragma once

#include <string>
#include <vector>

#include "legopet/array.hpp"

namespace legopet::plot {

struct Curve {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Static SVG line chart (one polyline per curve, axis ticks, legend).
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Curve>& curves);

/// 8-bit binary PGM. Values are mapped from [lo, hi] (hi <= lo means
/// auto-range from the data).
void write_pgm(const std::string& path, const Array2D& img, double lo = 0.0, double hi = 0.0);

/// Horizontal strip of equally-tall images separated by thin gutters; each
/// tile is auto-ranged unless a fixed range is given.
struct Tile {
    const Array2D* image;
    double lo = 0.0, hi = 0.0;  // hi <= lo means auto-range
};
Array2D montage(const std::vector<std::vector<Tile>>& rows, int gutter = 2);

}  // namespace legopet::plot
