#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "legopet/dataset.hpp"
#include "legopet/unet.hpp"

namespace legopet::prior {

struct PriorLossConfig {
    double lambda1 = 0.1;    // weight of the wavelet term
    bool include_ll = false;
};

/// L = MSE(pred, target) + lambda1 * dwt_loss(pred, target).
torch::Tensor prior_loss(const torch::Tensor& pred, const torch::Tensor& target,
                         const PriorLossConfig& cfg);

struct SupervisedTrainConfig {
    int epochs = 100;
    int batch_size = 4;
    double lr = 3e-5;
    uint64_t seed = 0;
};

struct SupervisedTrainResult {
    std::string last_stem;
    std::string best_stem;   // best validation loss
    std::vector<double> train_losses;  // per-epoch means
    std::vector<double> val_losses;
    int best_epoch = 0;
};

/// Trains PnPNet on (resampled sinogram -> reference image) pairs with the
/// MSE + wavelet loss; saves best-val and last checkpoints under out_dir.
SupervisedTrainResult train_prior(const tomo::DatasetManifest& data,
                                  const nn::UNetConfig& model_cfg, const PriorLossConfig& loss_cfg,
                                  const SupervisedTrainConfig& optim_cfg,
                                  const std::string& out_dir);

/// Frozen PnPNet wrapper that serves feature pyramids to the diffusion side.
class FeatureExtractor {
  public:
    explicit FeatureExtractor(const std::string& ckpt_stem);
    FeatureExtractor(nn::UNet net, nn::UNetConfig cfg);

    /// Pyramid for a batch of resampled sinograms (B,1,H,W); inference mode,
    /// detached (no gradients reach the prior).
    nn::FeaturePyramid extract(const torch::Tensor& sino) const;

    /// Gradient-carrying variant for the unfreeze escape hatch.
    nn::FeaturePyramid extract_live(const torch::Tensor& sino);

    const nn::UNetConfig& config() const { return cfg_; }
    nn::UNet& net() { return net_; }

  private:
    mutable nn::UNet net_{nullptr};
    nn::UNetConfig cfg_;
};

/// Convenience form of the above for a single raw sinogram.
nn::FeaturePyramid extract_features(const std::string& ckpt_stem, const Array2D& sinogram);

}  // namespace legopet::prior
