#pragma once

#include <cstdint>
#include <string>

#include "legopet/dataset.hpp"
#include "legopet/metrics.hpp"

namespace legopet::evalrun {

struct EvalConfig {
    std::string split = "test";
    uint64_t seed = 0;
    double lambda2 = 0.0;   // guidance scale for diffusion checkpoints
    int sample_batch = 10;  // diffusion sampling chunk size
    bool save_error_maps = false;
    bool save_reconstructions = false;
};

/// Reconstructs every item of the split with the given checkpoint (diffusion
/// kinds draw one seeded sample per item; regression/prior run a
/// deterministic forward) and scores PSNR/SSIM against the reference images
/// in their [0,1] range. Writes arrays into out_dir when requested.
metrics::MetricReport evaluate_checkpoint(const std::string& ckpt_stem,
                                          const tomo::DatasetManifest& data,
                                          const EvalConfig& cfg,
                                          const std::string& out_dir = "");

}  // namespace legopet::evalrun
