#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "legopet/dataset.hpp"
#include "legopet/diffusion.hpp"
#include "legopet/prior.hpp"
#include "legopet/unet.hpp"

namespace legopet::exp {

/// Validated experiment configuration. The JSON mirrors the documented
/// defaults exactly; unknown keys are rejected so config drift fails loudly.
struct ExperimentConfig {
    nlohmann::json tree;

    std::string hash() const;
    uint64_t root_seed() const;
    std::string output_root() const;  // honors LEGOPET_OUTPUT_ROOT

    tomo::DatasetConfig dataset_config() const;
    nn::UNetConfig denoiser_config() const;    // in=2 (x_t + sinogram), time on
    nn::UNetConfig prior_config() const;       // in=1, time off
    nn::UNetConfig regression_config() const;  // in=1, time off
    prior::PriorLossConfig prior_loss_config() const;
    prior::SupervisedTrainConfig prior_train_config() const;
    prior::SupervisedTrainConfig regression_train_config() const;
    diffusion::DiffusionTrainConfig diffusion_train_config() const;
    diffusion::GuidanceConfig guidance_config() const;
};

nlohmann::json default_config_json();
ExperimentConfig default_config();
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Dot-path override, e.g. "diffusion.epochs=50" or "guidance.p_dp=0.2".
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Stage bookkeeping: each stage directory carries a stage.json with the
/// config hash and root seed, written once the stage completes. A completed
/// stage with a matching hash is skipped; a mismatched hash refuses unless
/// overwrite is set.
enum class StageAction { Run, Skip };
StageAction stage_guard(const std::string& dir, const std::string& stage,
                        const std::string& config_hash, uint64_t root_seed, bool overwrite);
void stage_complete(const std::string& dir, const std::string& stage,
                    const std::string& config_hash, uint64_t root_seed,
                    const nlohmann::json& extra = {});

std::string dataset_dir(const ExperimentConfig& cfg);
std::string prior_dir(const ExperimentConfig& cfg);
std::string diffusion_dir(const ExperimentConfig& cfg, const std::string& kind, uint64_t seed);

std::string run_gen_data(const ExperimentConfig& cfg, bool overwrite);
std::string run_train_prior(const ExperimentConfig& cfg, bool overwrite);
std::string run_train_regression(const ExperimentConfig& cfg, bool overwrite);

struct DiffusionStageOptions {
    bool guidance_features = true;         // false => plain-cDPM baseline
    std::optional<double> p_dp;            // override guidance.p_dp
    std::optional<uint64_t> seed;          // override derived diffusion seed
    std::optional<int> epochs;
    std::optional<int> val_every;
    bool save_epoch_grid = false;
};
std::string run_train_diffusion(const ExperimentConfig& cfg, const DiffusionStageOptions& opt,
                                bool overwrite);

struct EvalStageOptions {
    std::string split = "test";
    std::optional<double> lambda2;
    std::optional<uint64_t> seed;
    std::string name;  // output dir suffix; derived from checkpoint when empty
};
std::string run_eval(const ExperimentConfig& cfg, const std::string& ckpt_stem,
                     const EvalStageOptions& opt, bool overwrite);

std::string run_sample(const ExperimentConfig& cfg, const std::string& ckpt_stem,
                       const std::string& split, int index, int count, uint64_t seed,
                       bool overwrite);

/// Fig.-3-style recipe: trains the cDPM and LegoPET arms with identical
/// seeds/optimizer and dropout disabled, evaluates val PSNR/SSIM on the epoch
/// grid, and writes two-curve plots plus raw curve data.
std::string run_ablation(const ExperimentConfig& cfg, bool overwrite);

/// Table-1-style comparison table plus side-by-side panels for K slices.
std::string run_report(const ExperimentConfig& cfg, const std::vector<std::string>& eval_dirs,
                       bool overwrite);

}  // namespace legopet::exp
