#include "legopet/prior.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "legopet/checkpoint.hpp"
#include "legopet/errors.hpp"
#include "legopet/rng.hpp"
#include "legopet/torch_bridge.hpp"
#include "legopet/trainer_common.hpp"
#include "legopet/wavelet.hpp"

namespace fs = std::filesystem;

namespace legopet::prior {

torch::Tensor prior_loss(const torch::Tensor& pred, const torch::Tensor& target,
                         const PriorLossConfig& cfg) {
    if (pred.sizes() != target.sizes()) throw ShapeError("prior_loss: shape mismatch");
    if (cfg.lambda1 < 0) throw ConfigError("prior_loss: lambda1 must be >= 0");
    auto mse = torch::mse_loss(pred, target);
    if (cfg.lambda1 == 0.0) return mse;
    return mse + cfg.lambda1 * wavelet::dwt_loss(pred, target, cfg.include_ll);
}

SupervisedTrainResult train_prior(const tomo::DatasetManifest& data,
                                  const nn::UNetConfig& model_cfg, const PriorLossConfig& loss_cfg,
                                  const SupervisedTrainConfig& optim_cfg,
                                  const std::string& out_dir) {
    if (model_cfg.in_channels != 1 || model_cfg.out_channels != 1)
        throw ConfigError("train_prior: PnPNet maps one sinogram channel to one image channel");
    if (model_cfg.time_embedding)
        throw ConfigError("train_prior: PnPNet takes no timestep");
    auto loss_fn = [&](const torch::Tensor& pred, const torch::Tensor& target) {
        return prior_loss(pred, target, loss_cfg);
    };
    return train_supervised(data, model_cfg, optim_cfg, out_dir, "prior", loss_fn);
}

FeatureExtractor::FeatureExtractor(const std::string& ckpt_stem) {
    nn::CheckpointMeta meta;
    net_ = nn::load_checkpoint(ckpt_stem, &meta);
    if (meta.kind != "prior")
        throw ConfigError("FeatureExtractor: checkpoint kind is '" + meta.kind +
                          "', expected 'prior'");
    cfg_ = meta.config;
    net_->eval();
}

FeatureExtractor::FeatureExtractor(nn::UNet net, nn::UNetConfig cfg)
    : net_(std::move(net)), cfg_(std::move(cfg)) {
    net_->eval();
}

nn::FeaturePyramid FeatureExtractor::extract(const torch::Tensor& sino) const {
    torch::NoGradGuard no_grad;
    auto [out, pyr] = nn::forward_with_taps(net_, sino);
    (void)out;
    return pyr.detach();
}

nn::FeaturePyramid FeatureExtractor::extract_live(const torch::Tensor& sino) {
    auto [out, pyr] = nn::forward_with_taps(net_, sino);
    (void)out;
    return pyr;
}

nn::FeaturePyramid extract_features(const std::string& ckpt_stem, const Array2D& sinogram) {
    FeatureExtractor ex(ckpt_stem);
    auto sino = nn::resample_sinogram(to_tensor(sinogram), ex.config().image_size)
                    .unsqueeze(0)
                    .unsqueeze(0);
    return ex.extract(sino);
}

}  // namespace legopet::prior
