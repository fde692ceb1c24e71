#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "legopet/array.hpp"

namespace legopet::npy {

/// Minimal NPY v1.0 container: little-endian '<f4'/'<f8', C order.
/// Enough for the dataset arrays this project reads and writes; numpy can
/// load every file we emit.
void save(const std::string& path, const std::vector<int64_t>& shape, const double* data);
void save_f32(const std::string& path, const std::vector<int64_t>& shape, const float* data);

struct Loaded {
    std::vector<int64_t> shape;
    std::vector<double> data;  // widened to double regardless of on-disk dtype
};

Loaded load(const std::string& path);

void save(const std::string& path, const Array2D& a);
void save_f32(const std::string& path, const Array2D& a);
Array2D load_2d(const std::string& path);

}  // namespace legopet::npy
