#include "legopet/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "legopet/checkpoint.hpp"
#include "legopet/errors.hpp"
#include "legopet/eval_runner.hpp"
#include "legopet/hashutil.hpp"
#include "legopet/npy.hpp"
#include "legopet/plot.hpp"
#include "legopet/regression.hpp"
#include "legopet/rng.hpp"
#include "legopet/torch_bridge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace legopet::exp {

namespace {

void validate_against(const json& value, const json& schema, const std::string& path) {
    if (!value.is_object()) return;
    if (!schema.is_object())
        throw ConfigError("config: '" + path + "' should be a scalar or array, not an object");
    for (const auto& [key, sub] : value.items()) {
        if (!schema.contains(key))
            throw ConfigError("config: unknown key '" + (path.empty() ? key : path + "." + key) +
                              "'");
        validate_against(sub, schema.at(key), path.empty() ? key : path + "." + key);
    }
}

json merge_defaults(const json& defaults, const json& given) {
    json out = defaults;
    for (const auto& [key, sub] : given.items()) {
        if (out.contains(key) && out.at(key).is_object() && sub.is_object())
            out[key] = merge_defaults(out.at(key), sub);
        else
            out[key] = sub;
    }
    return out;
}

std::vector<int> as_int_vector(const json& j) { return j.get<std::vector<int>>(); }

}  // namespace

json default_config_json() {
    return json{
        {"seeds", {{"root", 0}}},
        {"paths", {{"output_root", "runs"}}},
        {"data",
         {{"image_size", 64},
          {"n_phantoms", 20},
          {"rotations", 5},
          {"complexity", 3},
          {"total_counts", 1e6},
          {"mlem_iters", 60},
          {"mlem_subsets", 4},
          {"split", {{"train", 0.85}, {"val", 0.05}, {"test", 0.10}}},
          {"n_angles", 0},
          {"n_bins", 0},
          {"sino_percentile", 99.9}}},
        {"model",
         {{"base_channels", 16},
          {"channel_multipliers", {1, 2, 2, 4}},
          {"n_res_blocks_per_level", 1},
          {"attention_levels", {2, 3}},
          {"time_embedding_dim", 0},
          {"feature_adapter_1x1", false}}},
        {"prior",
         {{"epochs", 100},
          {"batch_size", 4},
          {"lr", 3e-5},
          {"lambda1", 0.1},
          {"include_ll", false}}},
        {"diffusion",
         {{"epochs", 100},
          {"batch_size", 4},
          {"lr", 1e-4},
          {"T", 1000},
          {"beta_start", 1e-4},
          {"beta_end", 0.02},
          {"val_every", 20},
          {"ema", false},
          {"ema_decay", 0.999},
          {"unfreeze_prior", false}}},
        {"guidance", {{"p_dp", 0.1}, {"lambda2", 0.0}}},
        {"regression", {{"epochs", 100}, {"batch_size", 4}, {"lr", 1e-4}}},
        {"eval",
         {{"split", "test"},
          {"sample_batch", 10},
          {"save_error_maps", true},
          {"save_reconstructions", true}}},
        {"ablation", {{"epochs", 100}, {"cadence", 20}, {"seeds", {1, 2, 3}}}},
        {"report", {{"k_slices", 2}}}};
}

ExperimentConfig config_from_json(const json& j) {
    const json defaults = default_config_json();
    validate_against(j, defaults, "");
    ExperimentConfig cfg;
    cfg.tree = merge_defaults(defaults, j);
    // eager validation of the derived configs
    cfg.dataset_config();
    cfg.denoiser_config().validate();
    cfg.prior_config().validate();
    cfg.regression_config().validate();
    return cfg;
}

ExperimentConfig default_config() { return config_from_json(json::object()); }

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DependencyError("config file not found: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like section.key=value: " + assignment);
    std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    std::string pointer = "/";
    for (char c : path) pointer += c == '.' ? '/' : c;
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // unquoted strings, e.g. eval.split=test
    }
    json patch = json::object();
    json* node = &patch;
    std::string key;
    std::istringstream ss(path);
    std::vector<std::string> parts;
    while (std::getline(ss, key, '.')) parts.push_back(key);
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        (*node)[parts[i]] = json::object();
        node = &(*node)[parts[i]];
    }
    if (parts.empty()) throw ConfigError("empty override path");
    (*node)[parts.back()] = parsed;
    validate_against(patch, default_config_json(), "");
    cfg.tree = merge_defaults(cfg.tree, patch);
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(tree.dump())); }

uint64_t ExperimentConfig::root_seed() const { return tree.at("seeds").at("root").get<uint64_t>(); }

std::string ExperimentConfig::output_root() const {
    if (const char* env = std::getenv("LEGOPET_OUTPUT_ROOT"); env && *env) return env;
    return tree.at("paths").at("output_root").get<std::string>();
}

tomo::DatasetConfig ExperimentConfig::dataset_config() const {
    const auto& d = tree.at("data");
    tomo::DatasetConfig c;
    c.image_size = d.at("image_size");
    c.n_phantoms = d.at("n_phantoms");
    c.rotations = d.at("rotations");
    c.complexity = d.at("complexity");
    c.total_counts = d.at("total_counts");
    c.mlem.n_iters = d.at("mlem_iters");
    c.mlem.subsets = d.at("mlem_subsets");
    c.split.train = d.at("split").at("train");
    c.split.val = d.at("split").at("val");
    c.split.test = d.at("split").at("test");
    c.seed = derive_seed(root_seed(), 11);
    c.n_angles = d.at("n_angles");
    c.n_bins = d.at("n_bins");
    c.sino_percentile = d.at("sino_percentile");
    return c;
}

namespace {
nn::UNetConfig model_from_section(const json& m, int image_size) {
    nn::UNetConfig c;
    c.image_size = image_size;
    c.base_channels = m.at("base_channels");
    const auto mults = as_int_vector(m.at("channel_multipliers"));
    if (mults.size() != 4) throw ConfigError("model.channel_multipliers must have 4 entries");
    std::copy(mults.begin(), mults.end(), c.channel_multipliers.begin());
    c.n_res_blocks_per_level = m.at("n_res_blocks_per_level");
    const auto levels = as_int_vector(m.at("attention_levels"));
    c.attention_levels = std::set<int>(levels.begin(), levels.end());
    c.time_embedding_dim = m.at("time_embedding_dim");
    c.feature_adapter_1x1 = m.at("feature_adapter_1x1");
    return c;
}
}  // namespace

nn::UNetConfig ExperimentConfig::denoiser_config() const {
    auto c = model_from_section(tree.at("model"), tree.at("data").at("image_size"));
    c.in_channels = 2;
    c.out_channels = 1;
    c.time_embedding = true;
    return c;
}

nn::UNetConfig ExperimentConfig::prior_config() const {
    auto c = model_from_section(tree.at("model"), tree.at("data").at("image_size"));
    c.in_channels = 1;
    c.out_channels = 1;
    c.time_embedding = false;
    return c;
}

nn::UNetConfig ExperimentConfig::regression_config() const {
    // same backbone family, taps/ports unused, no time conditioning
    return prior_config();
}

prior::PriorLossConfig ExperimentConfig::prior_loss_config() const {
    prior::PriorLossConfig c;
    c.lambda1 = tree.at("prior").at("lambda1");
    c.include_ll = tree.at("prior").at("include_ll");
    return c;
}

prior::SupervisedTrainConfig ExperimentConfig::prior_train_config() const {
    prior::SupervisedTrainConfig c;
    c.epochs = tree.at("prior").at("epochs");
    c.batch_size = tree.at("prior").at("batch_size");
    c.lr = tree.at("prior").at("lr");
    c.seed = derive_seed(root_seed(), 22);
    return c;
}

prior::SupervisedTrainConfig ExperimentConfig::regression_train_config() const {
    prior::SupervisedTrainConfig c;
    c.epochs = tree.at("regression").at("epochs");
    c.batch_size = tree.at("regression").at("batch_size");
    c.lr = tree.at("regression").at("lr");
    c.seed = derive_seed(root_seed(), 33);
    return c;
}

diffusion::DiffusionTrainConfig ExperimentConfig::diffusion_train_config() const {
    const auto& d = tree.at("diffusion");
    diffusion::DiffusionTrainConfig c;
    c.epochs = d.at("epochs");
    c.batch_size = d.at("batch_size");
    c.lr = d.at("lr");
    c.T = d.at("T");
    c.beta_start = d.at("beta_start");
    c.beta_end = d.at("beta_end");
    c.val_every = d.at("val_every");
    c.ema = d.at("ema");
    c.ema_decay = d.at("ema_decay");
    c.unfreeze_prior = d.at("unfreeze_prior");
    c.seed = derive_seed(root_seed(), 44);
    return c;
}

diffusion::GuidanceConfig ExperimentConfig::guidance_config() const {
    diffusion::GuidanceConfig g;
    g.p_dp = tree.at("guidance").at("p_dp");
    g.lambda2 = tree.at("guidance").at("lambda2");
    return g;
}

StageAction stage_guard(const std::string& dir, const std::string& stage,
                        const std::string& config_hash, uint64_t root_seed, bool overwrite) {
    const fs::path marker = fs::path(dir) / "stage.json";
    if (fs::exists(marker)) {
        std::ifstream f(marker);
        json j;
        f >> j;
        if (!overwrite) {
            if (j.value("config_hash", "") == config_hash && j.value("completed", false)) {
                std::cerr << "[skip] " << stage << ": up to date in " << dir << "\n";
                return StageAction::Skip;
            }
            throw DependencyError(stage + ": " + dir +
                                  " holds different or incomplete results (config hash " +
                                  j.value("config_hash", "?") + " vs " + config_hash +
                                  "); pass --overwrite to redo");
        }
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
    (void)root_seed;
    return StageAction::Run;
}

void stage_complete(const std::string& dir, const std::string& stage,
                    const std::string& config_hash, uint64_t root_seed, const json& extra) {
    json j{{"stage", stage},
           {"config_hash", config_hash},
           {"root_seed", root_seed},
           {"completed", true}};
    if (!extra.is_null() && !extra.empty()) j["extra"] = extra;
    std::ofstream f(fs::path(dir) / "stage.json");
    f << j.dump(2) << "\n";
    if (!f) throw IoError("stage_complete: cannot write stage.json in " + dir);
}

std::string dataset_dir(const ExperimentConfig& cfg) {
    return (fs::path(cfg.output_root()) / "dataset").string();
}

std::string prior_dir(const ExperimentConfig& cfg) {
    return (fs::path(cfg.output_root()) / "prior").string();
}

std::string diffusion_dir(const ExperimentConfig& cfg, const std::string& kind, uint64_t seed) {
    return (fs::path(cfg.output_root()) / ("diffusion_" + kind + "_seed" + std::to_string(seed)))
        .string();
}

std::string run_gen_data(const ExperimentConfig& cfg, bool overwrite) {
    const std::string dir = dataset_dir(cfg);
    // gen-data refuses on any existing dataset rather than skipping: the
    // arrays are the root artifact every later stage hashes against
    build_dataset(cfg.dataset_config(), dir, overwrite);
    stage_complete(dir, "gen-data", cfg.hash(), cfg.root_seed());
    return dir;
}

std::string run_train_prior(const ExperimentConfig& cfg, bool overwrite) {
    const std::string dir = prior_dir(cfg);
    if (stage_guard(dir, "train-prior", cfg.hash(), cfg.root_seed(), overwrite) ==
        StageAction::Skip)
        return dir;
    const auto manifest = tomo::load_manifest(dataset_dir(cfg));
    const auto result = prior::train_prior(manifest, cfg.prior_config(), cfg.prior_loss_config(),
                                           cfg.prior_train_config(), dir);
    stage_complete(dir, "train-prior", cfg.hash(), cfg.root_seed(),
                   json{{"best_epoch", result.best_epoch}});
    return dir;
}

std::string run_train_regression(const ExperimentConfig& cfg, bool overwrite) {
    const std::string dir = (fs::path(cfg.output_root()) / "regression").string();
    if (stage_guard(dir, "train-regression", cfg.hash(), cfg.root_seed(), overwrite) ==
        StageAction::Skip)
        return dir;
    const auto manifest = tomo::load_manifest(dataset_dir(cfg));
    regression::train_regression(manifest, cfg.regression_config(),
                                 cfg.regression_train_config(), dir);
    stage_complete(dir, "train-regression", cfg.hash(), cfg.root_seed());
    return dir;
}

std::string run_train_diffusion(const ExperimentConfig& cfg, const DiffusionStageOptions& opt,
                                bool overwrite) {
    auto train_cfg = cfg.diffusion_train_config();
    if (opt.seed) train_cfg.seed = *opt.seed;
    if (opt.epochs) train_cfg.epochs = *opt.epochs;
    if (opt.val_every) train_cfg.val_every = *opt.val_every;
    train_cfg.save_epoch_grid = opt.save_epoch_grid;
    auto guidance = cfg.guidance_config();
    if (opt.p_dp) guidance.p_dp = *opt.p_dp;

    const std::string kind = opt.guidance_features ? "legopet" : "cdpm";
    const std::string dir = diffusion_dir(cfg, kind, train_cfg.seed);
    // the stage hash must cover the flag overrides, not just the config file
    const std::string hash =
        hex64(fnv1a64(cfg.hash() + kind + std::to_string(guidance.p_dp) + "|" +
                      std::to_string(train_cfg.epochs) + "|" + std::to_string(train_cfg.seed)));
    if (stage_guard(dir, "train-diffusion", hash, cfg.root_seed(), overwrite) == StageAction::Skip)
        return dir;

    const auto manifest = tomo::load_manifest(dataset_dir(cfg));
    std::string prior_stem;
    if (opt.guidance_features) {
        prior_stem = (fs::path(prior_dir(cfg)) / "ckpt_best").string();
        if (!fs::exists(prior_stem + ".pt"))
            throw DependencyError("train-diffusion: prior checkpoint missing, run train-prior "
                                  "first (" + prior_stem + ".pt)");
    }
    diffusion::train_legopet(manifest, prior_stem, cfg.denoiser_config(), train_cfg, guidance,
                             dir);
    stage_complete(dir, "train-diffusion", hash, cfg.root_seed(),
                   json{{"kind", kind}, {"p_dp", guidance.p_dp}, {"seed", train_cfg.seed}});
    return dir;
}

std::string run_eval(const ExperimentConfig& cfg, const std::string& ckpt_stem,
                     const EvalStageOptions& opt, bool overwrite) {
    if (!fs::exists(ckpt_stem + ".pt"))
        throw DependencyError("eval: checkpoint not found: " + ckpt_stem + ".pt");
    evalrun::EvalConfig ecfg;
    ecfg.split = opt.split;
    ecfg.seed = opt.seed ? *opt.seed : derive_seed(cfg.root_seed(), 55);
    ecfg.lambda2 = opt.lambda2 ? *opt.lambda2 : cfg.guidance_config().lambda2;
    ecfg.sample_batch = cfg.tree.at("eval").at("sample_batch");
    ecfg.save_error_maps = cfg.tree.at("eval").at("save_error_maps");
    ecfg.save_reconstructions = cfg.tree.at("eval").at("save_reconstructions");

    std::string name = opt.name;
    if (name.empty()) {
        const auto meta = nn::load_checkpoint_meta(ckpt_stem);
        name = meta.kind + "_" + opt.split + "_" + hex64(fnv1a64(ckpt_stem)).substr(0, 8);
    }
    const std::string dir = (fs::path(cfg.output_root()) / ("eval_" + name)).string();
    const std::string hash = hex64(fnv1a64(cfg.hash() + ckpt_stem + opt.split +
                                           std::to_string(ecfg.lambda2) +
                                           std::to_string(ecfg.seed)));
    if (stage_guard(dir, "eval", hash, cfg.root_seed(), overwrite) == StageAction::Skip)
        return dir;
    const auto manifest = tomo::load_manifest(dataset_dir(cfg));
    evalrun::evaluate_checkpoint(ckpt_stem, manifest, ecfg, dir);
    stage_complete(dir, "eval", hash, cfg.root_seed(),
                   json{{"checkpoint", ckpt_stem}, {"split", opt.split}});
    return dir;
}

std::string run_sample(const ExperimentConfig& cfg, const std::string& ckpt_stem,
                       const std::string& split, int index, int count, uint64_t seed,
                       bool overwrite) {
    if (!fs::exists(ckpt_stem + ".pt"))
        throw DependencyError("sample: checkpoint not found: " + ckpt_stem + ".pt");
    const std::string dir =
        (fs::path(cfg.output_root()) /
         ("samples_" + split + "_" + std::to_string(index) + "_seed" + std::to_string(seed)))
            .string();
    const std::string hash =
        hex64(fnv1a64(cfg.hash() + ckpt_stem + split + std::to_string(index) + "#" +
                      std::to_string(count) + "#" + std::to_string(seed)));
    if (stage_guard(dir, "sample", hash, cfg.root_seed(), overwrite) == StageAction::Skip)
        return dir;

    nn::CheckpointMeta meta;
    auto net = nn::load_checkpoint(ckpt_stem, &meta);
    net->eval();
    if (meta.kind != "legopet" && meta.kind != "cdpm")
        throw ConfigError("sample: checkpoint kind '" + meta.kind + "' is not a diffusion model");
    const auto manifest = tomo::load_manifest(dataset_dir(cfg));
    const auto& items = manifest.split(split);
    if (index < 0 || index >= static_cast<int>(items.size()))
        throw ConfigError("sample: index out of range for split " + split);
    const auto li = tomo::load_item(manifest, items[index]);

    std::optional<prior::FeatureExtractor> extractor;
    if (meta.kind == "legopet") extractor.emplace(meta.prior_checkpoint);
    auto sino =
        nn::resample_sinogram(to_tensor(li.sinogram), meta.config.image_size).unsqueeze(0).unsqueeze(0);
    const auto sched = diffusion::make_schedule(
        meta.extra.contains("T") ? meta.extra.at("T").get<int>() : 1000);
    diffusion::GuidanceConfig guidance = cfg.guidance_config();
    auto gen = at::detail::createCPUGenerator(seed);
    for (int j = 0; j < count; ++j) {
        diffusion::ConditioningSet cond;
        cond.sinogram = sino;
        cond.pyramid = extractor ? extractor->extract(sino)
                                 : nn::zero_pyramid(meta.config, 1, sino.options());
        const auto res = diffusion::sample(net, cond, sched, guidance, gen);
        const auto rec01 = to_array2d(((res.unclamped.clamp(-1, 1) + 1) / 2)[0][0]);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "sample_%02d", j);
        npy::save_f32((fs::path(dir) / (std::string(buf) + ".npy")).string(), rec01);
        plot::write_pgm((fs::path(dir) / (std::string(buf) + ".pgm")).string(), rec01, 0.0, 1.0);
    }
    plot::write_pgm((fs::path(dir) / "reference.pgm").string(), li.reference, 0.0, 1.0);
    stage_complete(dir, "sample", hash, cfg.root_seed());
    return dir;
}

std::string run_ablation(const ExperimentConfig& cfg, bool overwrite) {
    const auto& ab = cfg.tree.at("ablation");
    const int epochs = ab.at("epochs");
    const int cadence = ab.at("cadence");
    const auto seeds = ab.at("seeds").get<std::vector<uint64_t>>();
    if (seeds.empty()) throw ConfigError("ablation: need at least one seed");

    const std::string dir = (fs::path(cfg.output_root()) / "ablation").string();
    const std::string hash = hex64(fnv1a64(cfg.hash() + "ablation"));
    if (stage_guard(dir, "ablation", hash, cfg.root_seed(), overwrite) == StageAction::Skip)
        return dir;

    // identical seeds and optimizer settings per arm; dropout disabled
    json curves;
    curves["epochs"] = json::array();
    for (int e = cadence; e <= epochs; e += cadence) curves["epochs"].push_back(e);

    std::map<std::string, std::vector<std::vector<double>>> psnr_series, ssim_series;
    for (const auto& kind : {std::string("cdpm"), std::string("legopet")}) {
        for (uint64_t seed : seeds) {
            DiffusionStageOptions opt;
            opt.guidance_features = kind == "legopet";
            opt.p_dp = 0.0;  // guidance dropout disabled in this recipe
            opt.seed = seed;
            opt.epochs = epochs;
            opt.val_every = cadence;
            opt.save_epoch_grid = true;
            const std::string arm_dir = run_train_diffusion(cfg, opt, overwrite);

            // collect the per-epoch validation metrics from the training log
            std::ifstream log(fs::path(arm_dir) / "log.jsonl");
            std::vector<double> psnr_curve, ssim_curve;
            std::string line;
            while (std::getline(log, line)) {
                if (line.empty()) continue;
                const json rec = json::parse(line);
                if (rec.contains("val_psnr") && rec.at("epoch").get<int>() % cadence == 0) {
                    psnr_curve.push_back(rec.at("val_psnr"));
                    ssim_curve.push_back(rec.at("val_ssim"));
                }
            }
            psnr_series[kind].push_back(psnr_curve);
            ssim_series[kind].push_back(ssim_curve);
        }
    }

    auto mean_curve = [&](const std::vector<std::vector<double>>& series) {
        std::vector<double> mean;
        if (series.empty()) return mean;
        const size_t n = series.front().size();
        mean.assign(n, 0.0);
        for (const auto& s : series)
            for (size_t i = 0; i < n && i < s.size(); ++i) mean[i] += s[i];
        for (double& v : mean) v /= static_cast<double>(series.size());
        return mean;
    };

    std::vector<double> grid;
    for (const auto& e : curves["epochs"]) grid.push_back(e.get<double>());
    for (const auto& metric : {std::string("psnr"), std::string("ssim")}) {
        auto& series = metric == "psnr" ? psnr_series : ssim_series;
        std::vector<plot::Curve> pcurves;
        for (const auto& kind : {std::string("cdpm"), std::string("legopet")}) {
            plot::Curve c;
            c.label = kind == "cdpm" ? "cDPM (no guidance)" : "LegoPET (guided)";
            c.y = mean_curve(series[kind]);
            c.x = std::vector<double>(grid.begin(), grid.begin() + c.y.size());
            pcurves.push_back(std::move(c));
            json per_seed = json::array();
            for (const auto& s : series[kind]) per_seed.push_back(s);
            curves[kind][metric] = {{"per_seed", per_seed}, {"mean", mean_curve(series[kind])}};
        }
        plot::write_svg_chart((fs::path(dir) / (metric + ".svg")).string(),
                              "Validation " + metric + " vs epoch", "epoch", metric, pcurves);
    }
    curves["seeds"] = seeds;
    curves["cadence"] = cadence;
    std::ofstream cf(fs::path(dir) / "curves.json");
    cf << curves.dump(2) << "\n";

    stage_complete(dir, "ablation", hash, cfg.root_seed(),
                   json{{"seeds", seeds}, {"epochs", epochs}, {"cadence", cadence}});
    return dir;
}

std::string run_report(const ExperimentConfig& cfg, const std::vector<std::string>& eval_dirs,
                       bool overwrite) {
    if (eval_dirs.size() < 2) throw ConfigError("report: need at least 2 metric reports");
    const std::string dir = (fs::path(cfg.output_root()) / "report").string();
    std::string key = cfg.hash();
    for (const auto& d : eval_dirs) key += "|" + d;
    const std::string hash = hex64(fnv1a64(key));
    if (stage_guard(dir, "report", hash, cfg.root_seed(), overwrite) == StageAction::Skip)
        return dir;

    std::vector<metrics::MetricReport> reports;
    for (const auto& d : eval_dirs)
        reports.push_back(metrics::load_report((fs::path(d) / "report.json").string()));

    // consistency: every report must cover the same item set
    for (size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].per_item.size() != reports[0].per_item.size())
            throw ConfigError("report: item sets differ between metric reports");
        for (size_t k = 0; k < reports[i].per_item.size(); ++k)
            if (reports[i].per_item[k].id != reports[0].per_item[k].id)
                throw ConfigError("report: item sets differ between metric reports");
    }

    // order rows by mean PSNR descending; stable, so ties keep listed order
    std::vector<size_t> order(reports.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return reports[a].mean_psnr > reports[b].mean_psnr;
    });
    auto rank_of = [&](auto value_of) {
        // best and second-best column flags; ties resolved by listed order
        std::vector<size_t> idx(reports.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return value_of(reports[a]) > value_of(reports[b]);
        });
        std::vector<int> rank(reports.size(), 3);
        if (!idx.empty()) rank[idx[0]] = 1;
        if (idx.size() > 1) rank[idx[1]] = 2;
        return rank;
    };
    const auto psnr_rank = rank_of([](const metrics::MetricReport& r) { return r.mean_psnr; });
    const auto ssim_rank = rank_of([](const metrics::MetricReport& r) { return r.mean_ssim; });

    auto decorate = [](const std::string& text, int rank) {
        if (rank == 1) return "**" + text + "**";
        if (rank == 2) return "_" + text + "_";
        return text;
    };

    std::ofstream md(fs::path(dir) / "report.md");
    md << "# Reconstruction comparison\n\n"
       << "Best values are **bold**, second-best _italic_.\n\n"
       << "| Method | PSNR (dB) | SSIM | Params |\n|---|---|---|---|\n";
    char buf[64];
    for (size_t oi : order) {
        const auto& r = reports[oi];
        std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", r.mean_psnr, r.std_psnr);
        const std::string psnr_txt = buf;
        std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", r.mean_ssim, r.std_ssim);
        const std::string ssim_txt = buf;
        md << "| " << r.method << " | " << decorate(psnr_txt, psnr_rank[oi]) << " | "
           << decorate(ssim_txt, ssim_rank[oi]) << " | " << r.parameter_count << " |\n";
    }

    // side-by-side panels: sinogram | reference | each method, plus error maps
    const int k_slices = cfg.tree.at("report").at("k_slices");
    const auto manifest = tomo::load_manifest(dataset_dir(cfg));
    int written = 0;
    std::map<std::string, const tomo::DatasetItem*> by_id;
    for (const auto* split : {&manifest.train, &manifest.val, &manifest.test})
        for (const auto& x : *split) {
            char b[32];
            std::snprintf(b, sizeof(b), "item_%04d", x.index);
            by_id[b] = &x;
        }
    for (int k = 0; k < k_slices && k < static_cast<int>(reports[0].per_item.size()); ++k) {
        const std::string& id = reports[0].per_item[k].id;
        const auto found = by_id.find(id);
        if (found == by_id.end()) continue;
        const auto li = tomo::load_item(manifest, *found->second);
        std::vector<Array2D> recons, errmaps;
        bool complete = true;
        for (size_t ri = 0; ri < reports.size(); ++ri) {
            const fs::path rp = fs::path(eval_dirs[ri]) / (id + "_recon.npy");
            const fs::path ep = fs::path(eval_dirs[ri]) / (id + "_errmap.npy");
            if (!fs::exists(rp) || !fs::exists(ep)) {
                complete = false;
                break;
            }
            recons.push_back(npy::load_2d(rp.string()));
            errmaps.push_back(npy::load_2d(ep.string()));
        }
        if (!complete) continue;
        double err_hi = 0.0;
        for (const auto& e : errmaps) err_hi = std::max(err_hi, max_value(e));
        Array2D blank(li.reference.rows, li.reference.cols, 1.0);
        std::vector<plot::Tile> top{{&li.sinogram, 0, 0}, {&li.reference, 0.0, 1.0}};
        std::vector<plot::Tile> bottom{{&blank, 0.0, 1.0}, {&blank, 0.0, 1.0}};
        for (size_t ri = 0; ri < recons.size(); ++ri) {
            top.push_back({&recons[ri], 0.0, 1.0});
            bottom.push_back({&errmaps[ri], 0.0, err_hi});
        }
        const auto panel = plot::montage({top, bottom});
        plot::write_pgm((fs::path(dir) / ("panel_" + id + ".pgm")).string(), panel, 0.0, 1.0);
        ++written;
        md << "\nPanel " << id
           << ": sinogram | reference | " ;
        for (size_t ri = 0; ri < reports.size(); ++ri)
            md << reports[ri].method << (ri + 1 < reports.size() ? " | " : "");
        md << " (second row: squared error maps)\n";
    }
    md.close();
    stage_complete(dir, "report", hash, cfg.root_seed(), json{{"panels", written}});
    return dir;
}

}  // namespace legopet::exp
