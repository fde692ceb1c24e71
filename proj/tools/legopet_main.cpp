#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "legopet/errors.hpp"
#include "legopet/experiment.hpp"

namespace fs = std::filesystem;
using namespace legopet;

int main(int argc, char** argv) {
    CLI::App app{"Sinogram-to-image reconstruction with a feature-guided conditional "
                 "diffusion model: data simulation, prior/diffusion/baseline training, "
                 "evaluation and reporting"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool overwrite = false;
    int threads = 0;
    app.add_option("--config", config_path, "Experiment config (JSON)");
    app.add_option("--set", overrides, "Override a config key, dot-path style (a.b.c=value)");
    app.add_flag("--overwrite", overwrite, "Redo stages whose outputs already exist");
    app.add_option("--threads", threads, "Torch intra-op threads (0 = library default)");

    auto* gen_data = app.add_subcommand("gen-data", "Simulate the phantom/sinogram dataset");

    auto* train_prior = app.add_subcommand("train-prior", "Train the plug-and-play prior");

    auto* train_regression =
        app.add_subcommand("train-regression", "Train the regression baseline");

    auto* train_diffusion =
        app.add_subcommand("train-diffusion", "Train the conditional diffusion model");
    bool no_guidance = false;
    std::optional<double> p_dp;
    std::optional<uint64_t> diff_seed;
    std::optional<int> diff_epochs;
    train_diffusion->add_flag("--no-guidance-features", no_guidance,
                              "Train the plain cDPM baseline (zero feature biases)");
    train_diffusion->add_option("--p-dp", p_dp, "Conditioning dropout probability override");
    train_diffusion->add_option("--seed", diff_seed, "Training seed override");
    train_diffusion->add_option("--epochs", diff_epochs, "Epoch count override");

    auto* sample = app.add_subcommand("sample", "Draw posterior samples for one item");
    std::string sample_ckpt, sample_split = "test";
    int sample_index = 0, sample_count = 1;
    uint64_t sample_seed = 0;
    sample->add_option("--ckpt", sample_ckpt, "Checkpoint stem (path without .pt)")->required();
    sample->add_option("--split", sample_split, "Dataset split");
    sample->add_option("--index", sample_index, "Item index within the split");
    sample->add_option("--n", sample_count, "Number of samples");
    sample->add_option("--seed", sample_seed, "Sampling seed");

    auto* eval = app.add_subcommand("eval", "Score a checkpoint on a split");
    std::string eval_ckpt, eval_split = "test", eval_name;
    std::optional<double> eval_lambda2;
    std::optional<uint64_t> eval_seed;
    eval->add_option("--ckpt", eval_ckpt, "Checkpoint stem (path without .pt)")->required();
    eval->add_option("--split", eval_split, "Dataset split");
    eval->add_option("--lambda2", eval_lambda2, "Guidance scale override");
    eval->add_option("--seed", eval_seed, "Sampling seed override");
    eval->add_option("--name", eval_name, "Output directory suffix");

    auto* ablation = app.add_subcommand(
        "ablation", "Matched cDPM-vs-LegoPET training curves (guidance dropout off)");

    auto* report = app.add_subcommand("report", "Comparison table + image panels");
    std::vector<std::string> report_dirs;
    report->add_option("--eval", report_dirs, "Evaluation output directories (>= 2)")
        ->required()
        ->expected(-2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (threads > 0) torch::set_num_threads(threads);
        exp::ExperimentConfig cfg =
            config_path.empty() ? exp::default_config() : exp::load_config(config_path);
        for (const auto& o : overrides) exp::apply_override(cfg, o);

        if (gen_data->parsed()) {
            const auto dir = exp::run_gen_data(cfg, overwrite);
            std::cout << "dataset written to " << dir << "\n";
        } else if (train_prior->parsed()) {
            const auto dir = exp::run_train_prior(cfg, overwrite);
            std::cout << "prior checkpoints in " << dir << "\n";
        } else if (train_regression->parsed()) {
            const auto dir = exp::run_train_regression(cfg, overwrite);
            std::cout << "regression checkpoints in " << dir << "\n";
        } else if (train_diffusion->parsed()) {
            exp::DiffusionStageOptions opt;
            opt.guidance_features = !no_guidance;
            opt.p_dp = p_dp;
            opt.seed = diff_seed;
            opt.epochs = diff_epochs;
            const auto dir = exp::run_train_diffusion(cfg, opt, overwrite);
            std::cout << "diffusion checkpoints in " << dir << "\n";
        } else if (sample->parsed()) {
            const auto dir = exp::run_sample(cfg, sample_ckpt, sample_split, sample_index,
                                             sample_count, sample_seed, overwrite);
            std::cout << "samples in " << dir << "\n";
        } else if (eval->parsed()) {
            exp::EvalStageOptions opt;
            opt.split = eval_split;
            opt.lambda2 = eval_lambda2;
            opt.seed = eval_seed;
            opt.name = eval_name;
            const auto dir = exp::run_eval(cfg, eval_ckpt, opt, overwrite);
            std::cout << "evaluation in " << dir << "\n";
        } else if (ablation->parsed()) {
            const auto dir = exp::run_ablation(cfg, overwrite);
            std::cout << "ablation outputs in " << dir << "\n";
        } else if (report->parsed()) {
            const auto dir = exp::run_report(cfg, report_dirs, overwrite);
            std::cout << "report in " << dir << "\n";
        }
        return 0;
    } catch (const DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
