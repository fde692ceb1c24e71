#include "legopet/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "legopet/errors.hpp"
#include "legopet/hashutil.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace legopet::nn {

json unet_config_to_json(const UNetConfig& cfg) {
    return json{{"image_size", cfg.image_size},
                {"in_channels", cfg.in_channels},
                {"out_channels", cfg.out_channels},
                {"base_channels", cfg.base_channels},
                {"channel_multipliers", cfg.channel_multipliers},
                {"n_res_blocks_per_level", cfg.n_res_blocks_per_level},
                {"attention_levels", std::vector<int>(cfg.attention_levels.begin(),
                                                      cfg.attention_levels.end())},
                {"time_embedding", cfg.time_embedding},
                {"time_embedding_dim", cfg.time_embedding_dim},
                {"feature_adapter_1x1", cfg.feature_adapter_1x1}};
}

UNetConfig unet_config_from_json(const json& j) {
    UNetConfig cfg;
    cfg.image_size = j.at("image_size");
    cfg.in_channels = j.at("in_channels");
    cfg.out_channels = j.at("out_channels");
    cfg.base_channels = j.at("base_channels");
    const auto mults = j.at("channel_multipliers").get<std::vector<int>>();
    if (mults.size() != 4) throw ConfigError("channel_multipliers must have 4 entries");
    std::copy(mults.begin(), mults.end(), cfg.channel_multipliers.begin());
    cfg.n_res_blocks_per_level = j.at("n_res_blocks_per_level");
    const auto levels = j.at("attention_levels").get<std::vector<int>>();
    cfg.attention_levels = std::set<int>(levels.begin(), levels.end());
    cfg.time_embedding = j.at("time_embedding");
    cfg.time_embedding_dim = j.at("time_embedding_dim");
    cfg.feature_adapter_1x1 = j.at("feature_adapter_1x1");
    cfg.validate();
    return cfg;
}

bool taps_compatible(const UNetConfig& a, const UNetConfig& b) {
    return a.image_size == b.image_size && a.base_channels == b.base_channels &&
           a.channel_multipliers == b.channel_multipliers;
}

std::string rng_state_hash(const torch::Generator& gen) {
    const auto state = gen.get_state();
    return hex64(fnv1a64(state.data_ptr(), state.numel()));
}

void save_checkpoint(const std::string& stem, const UNet& net, const CheckpointMeta& meta) {
    torch::serialize::OutputArchive archive;
    net->save(archive);
    archive.save_to(stem + ".pt");

    json j;
    j["config"] = unet_config_to_json(meta.config);
    j["kind"] = meta.kind;
    j["step"] = meta.step;
    j["epoch"] = meta.epoch;
    j["rng_state_hash"] = meta.rng_state_hash;
    j["dataset_hash"] = meta.dataset_hash;
    j["prior_checkpoint"] = meta.prior_checkpoint;
    j["parameter_count"] = net->parameter_count();
    if (!meta.extra.is_null()) j["extra"] = meta.extra;
    std::ofstream f(stem + ".json");
    f << j.dump(2) << "\n";
    if (!f) throw IoError("save_checkpoint: cannot write " + stem + ".json");
}

CheckpointMeta load_checkpoint_meta(const std::string& stem) {
    std::ifstream f(stem + ".json");
    if (!f) throw DependencyError("checkpoint manifest not found: " + stem + ".json");
    json j;
    f >> j;
    CheckpointMeta meta;
    meta.config = unet_config_from_json(j.at("config"));
    meta.kind = j.at("kind");
    meta.step = j.at("step");
    meta.epoch = j.at("epoch");
    meta.rng_state_hash = j.at("rng_state_hash");
    meta.dataset_hash = j.at("dataset_hash");
    meta.prior_checkpoint = j.at("prior_checkpoint");
    if (j.contains("extra")) meta.extra = j.at("extra");
    return meta;
}

UNet load_checkpoint(const std::string& stem, CheckpointMeta* meta_out) {
    if (!fs::exists(stem + ".pt"))
        throw DependencyError("checkpoint not found: " + stem + ".pt");
    CheckpointMeta meta = load_checkpoint_meta(stem);
    UNet net = build_unet(meta.config);
    torch::serialize::InputArchive archive;
    archive.load_from(stem + ".pt");
    net->load(archive);
    if (meta_out) *meta_out = meta;
    return net;
}

}  // namespace legopet::nn
