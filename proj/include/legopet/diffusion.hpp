#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "legopet/dataset.hpp"
#include "legopet/schedule.hpp"
#include "legopet/unet.hpp"

namespace legopet::diffusion {

/// The conditioning bundle C = {s, b_d, b_m}. A null set carries all-zero
/// tensors of the same shapes and stands for "no conditioning".
struct ConditioningSet {
    torch::Tensor sinogram;    // (B,1,H,W), resampled to the image grid
    nn::FeaturePyramid pyramid;
    bool is_null = false;
};

ConditioningSet null_conditioning(const nn::UNetConfig& cfg, int64_t batch,
                                  const torch::TensorOptions& opts);

struct GuidanceConfig {
    double p_dp = 0.1;    // conditioning dropout probability during training
    double lambda2 = 0.0; // guidance scale at inference
};

/// Closed-form forward marginal x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
torch::Tensor q_sample(const torch::Tensor& x0, int t, const torch::Tensor& eps,
                       const NoiseSchedule& sched);
torch::Tensor q_sample(const torch::Tensor& x0, const torch::Tensor& t, const torch::Tensor& eps,
                       const NoiseSchedule& sched);

/// Posterior mean mu = (x_t - (1-alpha_t)/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t).
torch::Tensor posterior_mean(const torch::Tensor& x_t, int t, const torch::Tensor& eps_hat,
                             const NoiseSchedule& sched);
torch::Tensor posterior_mean(const torch::Tensor& x_t, const torch::Tensor& t,
                             const torch::Tensor& eps_hat, const NoiseSchedule& sched);

struct TrainingStats {
    int64_t items = 0;
    int64_t conditional_items = 0;  // items whose conditioning survived dropout
    int64_t null_items = 0;
};

/// One denoising-loss step: draws t ~ U{1..T} and eps ~ N(0,I) per item,
/// drops each item's conditioning with probability p_dp, and returns the
/// mean squared error between eps and the prediction. Draw order from `gen`:
/// timesteps, then noise, then dropout uniforms.
torch::Tensor training_step(nn::UNet& net, const torch::Tensor& x0, const ConditioningSet& cond,
                            const NoiseSchedule& sched, const GuidanceConfig& guidance,
                            torch::Generator& gen, TrainingStats* stats = nullptr);

/// Classifier-free combination (1+lambda2)*eps_cond - lambda2*eps_uncond.
/// lambda2 == 0 short-circuits to the single conditional evaluation.
torch::Tensor guided_epsilon(nn::UNet& net, const torch::Tensor& x_t, const torch::Tensor& t,
                             const ConditioningSet& cond, double lambda2);

struct SampleResult {
    torch::Tensor unclamped;
    torch::Tensor clamped;  // clamped to the [-1, 3] guard range
};

/// Ancestral sampling from x_T ~ N(0,I) down to x_0. Draw order from `gen`:
/// x_T first, then one z per step for t = T..2 (no draw at t = 1).
SampleResult sample(nn::UNet& net, const ConditioningSet& cond, const NoiseSchedule& sched,
                    const GuidanceConfig& guidance, torch::Generator& gen);

struct DiffusionTrainConfig {
    int epochs = 100;
    int batch_size = 4;
    double lr = 1e-4;
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    uint64_t seed = 0;
    int val_every = 20;           // epochs between validation samplings; 0 = never
    bool save_epoch_grid = false; // checkpoint at every validation epoch
    bool ema = false;
    double ema_decay = 0.999;
    bool unfreeze_prior = false;  // joint fine-tuning escape hatch, off by default
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double val_psnr = -1.0;  // <0 when no validation ran this epoch
    double val_ssim = -1.0;
    double wall_seconds = 0.0;
};

struct DiffusionTrainResult {
    std::string checkpoint_stem;
    std::string kind;  // "legopet" or "cdpm"
    std::vector<EpochRecord> epochs;
    TrainingStats stats;
};

/// Full conditional-DDPM training. prior_ckpt_stem empty => the plain cDPM
/// baseline (zero pyramids through the identical code path).
DiffusionTrainResult train_legopet(const tomo::DatasetManifest& data,
                                   const std::string& prior_ckpt_stem,
                                   const nn::UNetConfig& denoiser_cfg,
                                   const DiffusionTrainConfig& cfg,
                                   const GuidanceConfig& guidance, const std::string& out_dir);

}  // namespace legopet::diffusion
