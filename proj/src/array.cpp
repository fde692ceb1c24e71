#include "legopet/array.hpp"

#include <algorithm>
#include <cmath>

namespace legopet {

double dot(const Array2D& a, const Array2D& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double sum(const Array2D& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v;
    return acc;
}

double max_value(const Array2D& a) {
    double m = 0.0;
    if (!a.data.empty()) m = *std::max_element(a.data.begin(), a.data.end());
    return m;
}

double norm2(const Array2D& a) { return std::sqrt(dot(a, a)); }

Array2D rotate_bilinear(const Array2D& img, double degrees) {
    const double rad = degrees * M_PI / 180.0;
    const double ca = std::cos(rad), sa = std::sin(rad);
    const double cy = (img.rows - 1) / 2.0;
    const double cx = (img.cols - 1) / 2.0;
    Array2D out(img.rows, img.cols, 0.0);
    for (int r = 0; r < img.rows; ++r) {
        for (int c = 0; c < img.cols; ++c) {
            // inverse-map output pixel to source coordinates
            const double dy = r - cy, dx = c - cx;
            const double sx = ca * dx + sa * dy + cx;
            const double sy = -sa * dx + ca * dy + cy;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            double acc = 0.0;
            for (int oy = 0; oy <= 1; ++oy) {
                for (int ox = 0; ox <= 1; ++ox) {
                    const int xi = x0 + ox, yi = y0 + oy;
                    if (xi < 0 || xi >= img.cols || yi < 0 || yi >= img.rows) continue;
                    const double w = (ox ? fx : 1.0 - fx) * (oy ? fy : 1.0 - fy);
                    acc += w * img.at(yi, xi);
                }
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

}  // namespace legopet
