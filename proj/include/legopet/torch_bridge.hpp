#pragma once

#include <torch/torch.h>

#include "legopet/array.hpp"
#include "legopet/dataset.hpp"

namespace legopet {

torch::Tensor to_tensor(const Array2D& a,
                        torch::ScalarType dtype = torch::kFloat32);
Array2D to_array2d(const torch::Tensor& t);

/// One split of a dataset, materialized as tensors ready for training:
/// raw sinograms, sinograms resampled onto the image grid, and references
/// both in [0,1] and mapped to the diffusion range [-1,1].
struct TensorSplit {
    torch::Tensor sino_raw;   // (N,1,n_angles,n_bins)
    torch::Tensor sino;       // (N,1,H,W) conditioning channel
    torch::Tensor ref01;      // (N,1,H,W)
    torch::Tensor ref_pm1;    // (N,1,H,W), 2*ref01 - 1
    std::vector<int> item_indices;
};

TensorSplit load_split_tensors(const tomo::DatasetManifest& m, const std::string& split,
                               int image_size);

}  // namespace legopet
