#pragma once

#include <string>

#include <torch/torch.h>

#include "legopet/dataset.hpp"
#include "legopet/prior.hpp"
#include "legopet/unet.hpp"

namespace legopet::regression {

/// DeepPET-style deterministic sinogram-to-image regressor: the same U-Net
/// machinery with taps/ports unused and no time embedding, trained with
/// plain MSE.
prior::SupervisedTrainResult train_regression(const tomo::DatasetManifest& data,
                                              const nn::UNetConfig& model_cfg,
                                              const prior::SupervisedTrainConfig& optim_cfg,
                                              const std::string& out_dir);

/// Single deterministic forward pass of a trained regression checkpoint.
torch::Tensor predict(nn::UNet& net, const torch::Tensor& sino);
Array2D predict(const std::string& ckpt_stem, const Array2D& sinogram);

}  // namespace legopet::regression
