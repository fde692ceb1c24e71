#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "legopet/errors.hpp"

namespace legopet {

/// Dense row-major 2D double array. The workhorse type for phantoms,
/// sinograms and reconstructed images on the simulator/metrics side.
struct Array2D {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Array2D() = default;
    Array2D(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Array2D& o) const { return rows == o.rows && cols == o.cols; }
};

inline void require_same_shape(const Array2D& a, const Array2D& b, const std::string& where) {
    if (!a.same_shape(b))
        throw ShapeError(where + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols) + ")");
}

double dot(const Array2D& a, const Array2D& b);
double sum(const Array2D& a);
double max_value(const Array2D& a);
double norm2(const Array2D& a);

/// Rotate by `degrees` counter-clockwise about the image center with bilinear
/// interpolation; samples falling outside the source are 0.
Array2D rotate_bilinear(const Array2D& img, double degrees);

}  // namespace legopet
