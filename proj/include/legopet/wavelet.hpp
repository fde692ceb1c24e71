#pragma once

#include <torch/torch.h>

namespace legopet::wavelet {

/// One-level orthonormal Haar subbands of a (..., H, W) tensor; each band has
/// spatial size (H/2, W/2). lh responds to horizontal intensity steps
/// (vertical edges), hl to vertical steps, hh to diagonals.
struct SubbandSet {
    torch::Tensor ll, lh, hl, hh;
};

SubbandSet dwt2(const torch::Tensor& image);
torch::Tensor idwt2(const SubbandSet& sub);

/// MSE over the high-frequency subbands {lh, hl, hh} of pred vs target.
/// include_ll adds the ll band into the average as well (off by default: the
/// term is meant to penalize high-frequency mismatch only).
torch::Tensor dwt_loss(const torch::Tensor& pred, const torch::Tensor& target,
                       bool include_ll = false);

}  // namespace legopet::wavelet
