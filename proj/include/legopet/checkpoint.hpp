#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>
#include <torch/torch.h>

#include "legopet/unet.hpp"

namespace legopet::nn {

/// Sidecar manifest written next to every parameter archive
/// (<stem>.pt + <stem>.json).
struct CheckpointMeta {
    UNetConfig config;
    std::string kind;           // "prior" | "legopet" | "cdpm" | "regression"
    int64_t step = 0;
    int64_t epoch = 0;
    std::string rng_state_hash;
    std::string dataset_hash;
    std::string prior_checkpoint;  // set on legopet checkpoints
    nlohmann::json extra;
};

nlohmann::json unet_config_to_json(const UNetConfig& cfg);
UNetConfig unet_config_from_json(const nlohmann::json& j);

/// Tap shapes depend only on these fields; prior and denoiser configs that
/// agree on them exchange pyramids.
bool taps_compatible(const UNetConfig& a, const UNetConfig& b);

std::string rng_state_hash(const torch::Generator& gen);

void save_checkpoint(const std::string& stem, const UNet& net, const CheckpointMeta& meta);
CheckpointMeta load_checkpoint_meta(const std::string& stem);
UNet load_checkpoint(const std::string& stem, CheckpointMeta* meta_out = nullptr);

}  // namespace legopet::nn
