#include "legopet/diffusion.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "legopet/checkpoint.hpp"
#include "legopet/errors.hpp"
#include "legopet/metrics.hpp"
#include "legopet/prior.hpp"
#include "legopet/rng.hpp"
#include "legopet/torch_bridge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace legopet::diffusion {

namespace {

void check_t(int t, const NoiseSchedule& sched, const char* where) {
    if (t < 1 || t > sched.T)
        throw ConfigError(std::string(where) + ": t=" + std::to_string(t) +
                          " outside [1, " + std::to_string(sched.T) + "]");
}

/// (B,1,1,1) tensor of table[t_i - 1].
torch::Tensor gather1111(const std::vector<double>& table, const torch::Tensor& t,
                         const torch::TensorOptions& opts) {
    auto tl = t.to(torch::kLong).reshape({-1});
    std::vector<double> vals(tl.numel());
    const auto* p = tl.data_ptr<int64_t>();
    for (int64_t i = 0; i < tl.numel(); ++i) {
        const auto ti = p[i];
        if (ti < 1 || ti > static_cast<int64_t>(table.size()))
            throw ConfigError("timestep out of schedule range: " + std::to_string(ti));
        vals[i] = table[ti - 1];
    }
    return torch::tensor(vals, torch::kFloat64).to(opts.dtype()).reshape({-1, 1, 1, 1});
}

}  // namespace

ConditioningSet null_conditioning(const nn::UNetConfig& cfg, int64_t batch,
                                  const torch::TensorOptions& opts) {
    ConditioningSet c;
    c.sinogram = torch::zeros({batch, 1, cfg.image_size, cfg.image_size}, opts);
    c.pyramid = nn::zero_pyramid(cfg, batch, opts);
    c.is_null = true;
    return c;
}

torch::Tensor q_sample(const torch::Tensor& x0, int t, const torch::Tensor& eps,
                       const NoiseSchedule& sched) {
    check_t(t, sched, "q_sample");
    if (x0.sizes() != eps.sizes()) throw ShapeError("q_sample: x0/eps shape mismatch");
    const double abar = sched.alpha_bar_at(t);
    return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                       const NoiseSchedule& sched) {
    if (x0.sizes() != eps.sizes()) throw ShapeError("q_sample: x0/eps shape mismatch");
    auto abar = gather1111(sched.alpha_bar, t, x0.options());
    return abar.sqrt() * x0 + (1.0 - abar).sqrt() * eps;
}

torch::Tensor posterior_mean(const torch::Tensor& x_t, int t, const torch::Tensor& eps_hat,
                             const NoiseSchedule& sched) {
    check_t(t, sched, "posterior_mean");
    const double alpha = sched.alpha_at(t);
    const double abar = sched.alpha_bar_at(t);
    return (x_t - (1.0 - alpha) / std::sqrt(1.0 - abar) * eps_hat) / std::sqrt(alpha);
}

torch::Tensor posterior_mean(const torch::Tensor& x_t, const torch::Tensor& t,
                             const torch::Tensor& eps_hat, const NoiseSchedule& sched) {
    auto alpha = gather1111(sched.alpha, t, x_t.options());
    auto abar = gather1111(sched.alpha_bar, t, x_t.options());
    return (x_t - (1.0 - alpha) / (1.0 - abar).sqrt() * eps_hat) / alpha.sqrt();
}

torch::Tensor training_step(nn::UNet& net, const torch::Tensor& x0, const ConditioningSet& cond,
                            const NoiseSchedule& sched, const GuidanceConfig& guidance,
                            torch::Generator& gen, TrainingStats* stats) {
    const int64_t batch = x0.size(0);
    if (cond.sinogram.size(0) != batch) throw ShapeError("training_step: conditioning batch mismatch");

    auto t = torch::randint(1, sched.T + 1, {batch}, gen, torch::kLong);
    auto eps = torch::randn(x0.sizes(), gen, x0.options());
    auto drop_u = torch::rand({batch}, gen, x0.options());
    auto keep = (drop_u >= guidance.p_dp).to(x0.dtype());  // 1 = conditioning kept

    if (stats) {
        stats->items += batch;
        const auto kept = static_cast<int64_t>(keep.sum().item<double>());
        stats->conditional_items += kept;
        stats->null_items += batch - kept;
    }

    auto x_t = q_sample(x0, t, eps, sched);
    auto keep_map = keep.reshape({batch, 1, 1, 1});
    ConditioningSet eff;
    eff.sinogram = cond.sinogram * keep_map;
    for (const auto& m : cond.pyramid.b_d) eff.pyramid.b_d.push_back(m * keep_map);
    for (const auto& m : cond.pyramid.b_m) eff.pyramid.b_m.push_back(m * keep_map);

    auto input = torch::cat({x_t, eff.sinogram}, /*dim=*/1);
    auto eps_hat = nn::forward_with_biases(net, input, t, &eff.pyramid);
    return torch::mse_loss(eps_hat, eps);
}

torch::Tensor guided_epsilon(nn::UNet& net, const torch::Tensor& x_t, const torch::Tensor& t,
                             const ConditioningSet& cond, double lambda2) {
    if (cond.is_null)
        throw ConfigError("guided_epsilon: conditioning must be non-null (use the conditional set)");
    auto eps_c =
        nn::forward_with_biases(net, torch::cat({x_t, cond.sinogram}, 1), t, &cond.pyramid);
    if (lambda2 == 0.0) return eps_c;

    auto null_set = null_conditioning(net->config(), x_t.size(0), x_t.options());
    auto eps_u =
        nn::forward_with_biases(net, torch::cat({x_t, null_set.sinogram}, 1), t, &null_set.pyramid);
    return (1.0 + lambda2) * eps_c - lambda2 * eps_u;
}

SampleResult sample(nn::UNet& net, const ConditioningSet& cond, const NoiseSchedule& sched,
                    const GuidanceConfig& guidance, torch::Generator& gen) {
    torch::NoGradGuard no_grad;
    const auto& cfg = net->config();
    if (sched.T < 1) throw ConfigError("sample: empty schedule");
    const int64_t batch = cond.sinogram.size(0);
    auto x = torch::randn({batch, 1, cfg.image_size, cfg.image_size}, gen,
                          cond.sinogram.options());
    for (int t = sched.T; t >= 1; --t) {
        auto tt = torch::full({batch}, t, torch::kLong);
        auto eps = guided_epsilon(net, x, tt, cond, guidance.lambda2);
        auto mu = posterior_mean(x, t, eps, sched);
        if (t > 1) {
            auto z = torch::randn(x.sizes(), gen, x.options());
            x = mu + std::sqrt(sched.posterior_variance_at(t)) * z;
        } else {
            x = mu;
        }
    }
    SampleResult res;
    res.unclamped = x;
    res.clamped = x.clamp(-1.0, 3.0);
    return res;
}

DiffusionTrainResult train_legopet(const tomo::DatasetManifest& data,
                                   const std::string& prior_ckpt_stem,
                                   const nn::UNetConfig& denoiser_cfg,
                                   const DiffusionTrainConfig& cfg,
                                   const GuidanceConfig& guidance, const std::string& out_dir) {
    denoiser_cfg.validate();
    if (denoiser_cfg.in_channels != 2)
        throw ConfigError("train_legopet: denoiser wants in_channels=2 (x_t + sinogram channel)");
    if (data.model.image_size != denoiser_cfg.image_size)
        throw ConfigError("train_legopet: dataset image size " +
                          std::to_string(data.model.image_size) + " != model image size " +
                          std::to_string(denoiser_cfg.image_size));

    fs::create_directories(out_dir);
    const auto sched = make_schedule(cfg.T, cfg.beta_start, cfg.beta_end);
    const auto train = load_split_tensors(data, "train", denoiser_cfg.image_size);
    const auto val = load_split_tensors(data, "val", denoiser_cfg.image_size);
    const int64_t n_train = train.ref01.size(0);

    std::optional<prior::FeatureExtractor> extractor;
    if (!prior_ckpt_stem.empty()) {
        extractor.emplace(prior_ckpt_stem);
        if (!nn::taps_compatible(extractor->config(), denoiser_cfg))
            throw ConfigError("train_legopet: prior checkpoint config does not match denoiser");
    }
    const std::string kind = extractor ? "legopet" : "cdpm";

    // Per-item pyramids are a pure function of the frozen prior; precompute
    // once. The cdpm arm gets zero pyramids through the identical batch path.
    std::vector<nn::FeaturePyramid> cache;  // frozen-path cache, one per item
    if (extractor && !cfg.unfreeze_prior) {
        cache.reserve(n_train);
        for (int64_t i = 0; i < n_train; ++i)
            cache.push_back(extractor->extract(train.sino.slice(0, i, i + 1)));
    }

    torch::manual_seed(cfg.seed);
    auto net = nn::build_unet(denoiser_cfg);
    std::vector<torch::optim::OptimizerParamGroup> groups{net->parameters()};
    if (extractor && cfg.unfreeze_prior) groups.push_back(extractor->net()->parameters());
    torch::optim::Adam optim(groups, torch::optim::AdamOptions(cfg.lr));

    std::vector<torch::Tensor> ema_shadow;
    if (cfg.ema)
        for (const auto& p : net->parameters()) ema_shadow.push_back(p.detach().clone());

    auto gen = at::detail::createCPUGenerator(derive_seed(cfg.seed, 1));

    DiffusionTrainResult result;
    result.kind = kind;
    std::ofstream log(fs::path(out_dir) / "log.jsonl", std::ios::app);
    int64_t global_step = 0;
    const auto t_start = std::chrono::steady_clock::now();

    auto run_validation = [&](int epoch) -> std::pair<double, double> {
        torch::NoGradGuard ng;
        auto vgen = at::detail::createCPUGenerator(derive_seed(cfg.seed, 0x5a11d + epoch));
        const int64_t nv = val.ref01.size(0);
        ConditioningSet cond;
        cond.sinogram = val.sino;
        cond.pyramid = extractor ? extractor->extract(val.sino)
                                 : nn::zero_pyramid(denoiser_cfg, nv, val.sino.options());
        const auto res = sample(net, cond, sched, guidance, vgen);
        auto rec01 = ((res.unclamped.clamp(-1.0, 1.0) + 1.0) / 2.0);
        double psnr_sum = 0.0, ssim_sum = 0.0;
        for (int64_t i = 0; i < nv; ++i) {
            const auto pred = to_array2d(rec01[i][0]);
            const auto ref = to_array2d(val.ref01[i][0]);
            psnr_sum += metrics::psnr(pred, ref, 1.0);
            ssim_sum += metrics::ssim(pred, ref, 1.0);
        }
        return {psnr_sum / nv, ssim_sum / nv};
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto perm = torch::randperm(n_train, gen, torch::kLong);
        double loss_sum = 0.0;
        int64_t n_batches = 0;
        for (int64_t start = 0; start < n_train; start += cfg.batch_size) {
            const int64_t end = std::min(n_train, start + cfg.batch_size);
            auto idx = perm.slice(0, start, end);
            auto x0 = train.ref_pm1.index_select(0, idx);
            ConditioningSet cond;
            cond.sinogram = train.sino.index_select(0, idx);
            if (extractor && !cfg.unfreeze_prior) {
                const auto* ip = idx.data_ptr<int64_t>();
                std::vector<nn::FeaturePyramid const*> sel;
                for (int64_t k = 0; k < idx.numel(); ++k) sel.push_back(&cache[ip[k]]);
                for (size_t l = 0; l < sel.front()->b_d.size(); ++l) {
                    std::vector<torch::Tensor> maps;
                    for (auto* p : sel) maps.push_back(p->b_d[l].squeeze(0));
                    cond.pyramid.b_d.push_back(torch::stack(maps));
                }
                for (size_t m = 0; m < sel.front()->b_m.size(); ++m) {
                    std::vector<torch::Tensor> maps;
                    for (auto* p : sel) maps.push_back(p->b_m[m].squeeze(0));
                    cond.pyramid.b_m.push_back(torch::stack(maps));
                }
            } else if (extractor) {
                cond.pyramid = extractor->extract_live(cond.sinogram);
            } else {
                cond.pyramid = nn::zero_pyramid(denoiser_cfg, end - start, x0.options());
            }

            optim.zero_grad();
            auto loss = training_step(net, x0, cond, sched, guidance, gen, &result.stats);
            loss.backward();
            optim.step();
            ++global_step;
            loss_sum += loss.item<double>();
            ++n_batches;

            if (cfg.ema) {
                torch::NoGradGuard ng;
                const auto params = net->parameters();
                for (size_t i = 0; i < params.size(); ++i)
                    ema_shadow[i].mul_(cfg.ema_decay).add_(params[i], 1.0 - cfg.ema_decay);
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / std::max<int64_t>(1, n_batches);
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

        const bool validate = cfg.val_every > 0 && (epoch % cfg.val_every == 0 || epoch == cfg.epochs);
        if (validate && val.ref01.size(0) > 0) {
            std::tie(rec.val_psnr, rec.val_ssim) = run_validation(epoch);
            if (cfg.save_epoch_grid) {
                nn::CheckpointMeta meta;
                meta.config = denoiser_cfg;
                meta.kind = kind;
                meta.step = global_step;
                meta.epoch = epoch;
                meta.rng_state_hash = nn::rng_state_hash(gen);
                meta.dataset_hash = data.config_hash;
                meta.prior_checkpoint = prior_ckpt_stem;
                char buf[32];
                std::snprintf(buf, sizeof(buf), "ckpt_epoch_%04d", epoch);
                nn::save_checkpoint((fs::path(out_dir) / buf).string(), net, meta);
            }
        }

        json jl{{"epoch", rec.epoch}, {"loss", rec.loss}, {"wall_seconds", rec.wall_seconds}};
        if (rec.val_psnr >= 0) {
            jl["val_psnr"] = rec.val_psnr;
            jl["val_ssim"] = rec.val_ssim;
        }
        log << jl.dump() << "\n";
        log.flush();
        result.epochs.push_back(rec);
    }

    nn::CheckpointMeta meta;
    meta.config = denoiser_cfg;
    meta.kind = kind;
    meta.step = global_step;
    meta.epoch = cfg.epochs;
    meta.rng_state_hash = nn::rng_state_hash(gen);
    meta.dataset_hash = data.config_hash;
    meta.prior_checkpoint = prior_ckpt_stem;
    meta.extra = json{{"p_dp", guidance.p_dp}, {"lr", cfg.lr}, {"T", cfg.T}, {"seed", cfg.seed}};
    const std::string stem = (fs::path(out_dir) / "ckpt_last").string();
    nn::save_checkpoint(stem, net, meta);
    if (cfg.ema) {
        auto ema_net = nn::build_unet(denoiser_cfg);
        torch::NoGradGuard ng;
        auto params = ema_net->parameters();
        for (size_t i = 0; i < params.size(); ++i) params[i].copy_(ema_shadow[i]);
        nn::save_checkpoint((fs::path(out_dir) / "ckpt_last_ema").string(), ema_net, meta);
    }
    result.checkpoint_stem = stem;
    return result;
}

}  // namespace legopet::diffusion
