#pragma once

#include <functional>
#include <string>

#include <torch/torch.h>

#include "legopet/dataset.hpp"
#include "legopet/prior.hpp"

namespace legopet {

/// Shared supervised loop (PnPNet and the regression baseline): Adam at a
/// fixed learning rate, per-epoch train/val loss logging to log.jsonl, best-
/// validation and last checkpoints. Deterministic under a fixed seed.
prior::SupervisedTrainResult train_supervised(
    const tomo::DatasetManifest& data, const nn::UNetConfig& model_cfg,
    const prior::SupervisedTrainConfig& optim_cfg, const std::string& out_dir,
    const std::string& kind,
    const std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>& loss_fn);

}  // namespace legopet
