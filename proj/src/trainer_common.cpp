#include "legopet/trainer_common.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "legopet/checkpoint.hpp"
#include "legopet/errors.hpp"
#include "legopet/rng.hpp"
#include "legopet/torch_bridge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace legopet {

prior::SupervisedTrainResult train_supervised(
    const tomo::DatasetManifest& data, const nn::UNetConfig& model_cfg,
    const prior::SupervisedTrainConfig& optim_cfg, const std::string& out_dir,
    const std::string& kind,
    const std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>& loss_fn) {
    model_cfg.validate();
    if (data.model.image_size != model_cfg.image_size)
        throw ConfigError("train_supervised: dataset image size " +
                          std::to_string(data.model.image_size) + " != model image size " +
                          std::to_string(model_cfg.image_size));
    fs::create_directories(out_dir);

    const auto train = load_split_tensors(data, "train", model_cfg.image_size);
    const auto val = load_split_tensors(data, "val", model_cfg.image_size);
    const int64_t n_train = train.ref01.size(0);

    torch::manual_seed(optim_cfg.seed);
    auto net = nn::build_unet(model_cfg);
    torch::optim::Adam optim(net->parameters(), torch::optim::AdamOptions(optim_cfg.lr));
    auto gen = at::detail::createCPUGenerator(derive_seed(optim_cfg.seed, 2));

    prior::SupervisedTrainResult result;
    result.best_epoch = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::ofstream log(fs::path(out_dir) / "log.jsonl", std::ios::app);
    const auto t_start = std::chrono::steady_clock::now();

    auto save = [&](const std::string& name, int epoch, int64_t step) {
        nn::CheckpointMeta meta;
        meta.config = model_cfg;
        meta.kind = kind;
        meta.step = step;
        meta.epoch = epoch;
        meta.rng_state_hash = nn::rng_state_hash(gen);
        meta.dataset_hash = data.config_hash;
        meta.extra = json{{"lr", optim_cfg.lr}, {"seed", optim_cfg.seed}};
        const std::string stem = (fs::path(out_dir) / name).string();
        nn::save_checkpoint(stem, net, meta);
        return stem;
    };

    auto val_loss = [&]() {
        torch::NoGradGuard ng;
        return loss_fn(net->forward(val.sino), val.ref01).item<double>();
    };

    // epoch 0 checkpoint == initialization, so a zero-epoch run is exactly init
    result.last_stem = save("ckpt_last", 0, 0);
    result.best_stem = save("ckpt_best", 0, 0);
    if (optim_cfg.epochs > 0 && val.ref01.size(0) > 0) best_val = val_loss();

    int64_t step = 0;
    for (int epoch = 1; epoch <= optim_cfg.epochs; ++epoch) {
        auto perm = torch::randperm(n_train, gen, torch::kLong);
        double loss_sum = 0.0;
        int64_t n_batches = 0;
        for (int64_t start = 0; start < n_train; start += optim_cfg.batch_size) {
            const int64_t end = std::min(n_train, start + optim_cfg.batch_size);
            auto idx = perm.slice(0, start, end);
            auto input = train.sino.index_select(0, idx);
            auto target = train.ref01.index_select(0, idx);
            optim.zero_grad();
            auto loss = loss_fn(net->forward(input), target);
            loss.backward();
            optim.step();
            ++step;
            loss_sum += loss.item<double>();
            ++n_batches;
        }
        const double train_loss = loss_sum / std::max<int64_t>(1, n_batches);
        const double vloss = val.ref01.size(0) > 0 ? val_loss() : train_loss;
        result.train_losses.push_back(train_loss);
        result.val_losses.push_back(vloss);

        result.last_stem = save("ckpt_last", epoch, step);
        if (vloss < best_val) {
            best_val = vloss;
            result.best_epoch = epoch;
            result.best_stem = save("ckpt_best", epoch, step);
        }

        json jl{{"epoch", epoch},
                {"loss", train_loss},
                {"val_loss", vloss},
                {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                               t_start)
                                     .count()}};
        log << jl.dump() << "\n";
        log.flush();
    }
    return result;
}

}  // namespace legopet
