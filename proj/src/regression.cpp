#include "legopet/regression.hpp"

#include "legopet/checkpoint.hpp"
#include "legopet/errors.hpp"
#include "legopet/torch_bridge.hpp"
#include "legopet/trainer_common.hpp"

namespace legopet::regression {

prior::SupervisedTrainResult train_regression(const tomo::DatasetManifest& data,
                                              const nn::UNetConfig& model_cfg,
                                              const prior::SupervisedTrainConfig& optim_cfg,
                                              const std::string& out_dir) {
    if (model_cfg.time_embedding)
        throw ConfigError("train_regression: regression baseline takes no timestep");
    auto loss_fn = [](const torch::Tensor& pred, const torch::Tensor& target) {
        return torch::mse_loss(pred, target);
    };
    return train_supervised(data, model_cfg, optim_cfg, out_dir, "regression", loss_fn);
}

torch::Tensor predict(nn::UNet& net, const torch::Tensor& sino) {
    torch::NoGradGuard no_grad;
    net->eval();
    return net->forward(sino);
}

Array2D predict(const std::string& ckpt_stem, const Array2D& sinogram) {
    nn::CheckpointMeta meta;
    auto net = nn::load_checkpoint(ckpt_stem, &meta);
    if (meta.kind != "regression")
        throw ConfigError("predict: checkpoint kind is '" + meta.kind + "', expected 'regression'");
    auto sino = nn::resample_sinogram(to_tensor(sinogram), meta.config.image_size)
                    .unsqueeze(0)
                    .unsqueeze(0);
    return to_array2d(predict(net, sino).squeeze(0).squeeze(0));
}

}  // namespace legopet::regression
