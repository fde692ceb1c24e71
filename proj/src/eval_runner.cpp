#include "legopet/eval_runner.hpp"

#include <filesystem>

#include "legopet/checkpoint.hpp"
#include "legopet/diffusion.hpp"
#include "legopet/errors.hpp"
#include "legopet/npy.hpp"
#include "legopet/prior.hpp"
#include "legopet/rng.hpp"
#include "legopet/torch_bridge.hpp"

namespace fs = std::filesystem;

namespace legopet::evalrun {

metrics::MetricReport evaluate_checkpoint(const std::string& ckpt_stem,
                                          const tomo::DatasetManifest& data,
                                          const EvalConfig& cfg, const std::string& out_dir) {
    nn::CheckpointMeta meta;
    auto net = nn::load_checkpoint(ckpt_stem, &meta);
    net->eval();
    const auto& items = data.split(cfg.split);
    const auto split = load_split_tensors(data, cfg.split, meta.config.image_size);
    const int64_t n = split.ref01.size(0);

    const bool is_diffusion = meta.kind == "legopet" || meta.kind == "cdpm";
    if (!is_diffusion && meta.kind != "regression" && meta.kind != "prior")
        throw ConfigError("evaluate_checkpoint: cannot evaluate kind '" + meta.kind + "'");

    torch::Tensor rec01;  // (N,1,H,W) reconstructions in [0,1]
    if (is_diffusion) {
        std::optional<prior::FeatureExtractor> extractor;
        if (meta.kind == "legopet") {
            if (meta.prior_checkpoint.empty())
                throw DependencyError("evaluate_checkpoint: legopet checkpoint lacks prior path");
            extractor.emplace(meta.prior_checkpoint);
        }
        const auto sched = diffusion::make_schedule(
            meta.extra.contains("T") ? meta.extra.at("T").get<int>() : 1000);
        diffusion::GuidanceConfig guidance;
        guidance.lambda2 = cfg.lambda2;
        auto gen = at::detail::createCPUGenerator(derive_seed(cfg.seed, 0xe5a1));
        std::vector<torch::Tensor> chunks;
        for (int64_t lo = 0; lo < n; lo += cfg.sample_batch) {
            const int64_t hi = std::min(n, lo + cfg.sample_batch);
            diffusion::ConditioningSet cond;
            cond.sinogram = split.sino.slice(0, lo, hi);
            cond.pyramid = extractor
                               ? extractor->extract(cond.sinogram)
                               : nn::zero_pyramid(meta.config, hi - lo, cond.sinogram.options());
            auto res = diffusion::sample(net, cond, sched, guidance, gen);
            chunks.push_back(res.unclamped);
        }
        rec01 = (torch::cat(chunks).clamp(-1.0, 1.0) + 1.0) / 2.0;
    } else {
        torch::NoGradGuard ng;
        rec01 = net->forward(split.sino);
    }

    if (!out_dir.empty()) fs::create_directories(out_dir);

    metrics::MetricReport report;
    report.method = meta.kind;
    report.data_range = 1.0;
    report.parameter_count = net->parameter_count();
    for (int64_t i = 0; i < n; ++i) {
        const auto pred = to_array2d(rec01[i][0]);
        const auto ref = to_array2d(split.ref01[i][0]);
        metrics::ItemMetrics im;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "item_%04d", items[static_cast<size_t>(i)].index);
        im.id = buf;
        im.psnr = metrics::psnr(pred, ref, report.data_range);
        im.ssim = metrics::ssim(pred, ref, report.data_range);
        report.per_item.push_back(im);
        if (!out_dir.empty() && cfg.save_reconstructions)
            npy::save_f32((fs::path(out_dir) / (std::string(buf) + "_recon.npy")).string(), pred);
        if (!out_dir.empty() && cfg.save_error_maps)
            npy::save_f32((fs::path(out_dir) / (std::string(buf) + "_errmap.npy")).string(),
                          metrics::error_map(pred, ref));
    }
    report.finalize();
    if (!out_dir.empty())
        metrics::save_report(report, (fs::path(out_dir) / "report.json").string());
    return report;
}

}  // namespace legopet::evalrun
