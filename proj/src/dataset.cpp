#include "legopet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "legopet/errors.hpp"
#include "legopet/hashutil.hpp"
#include "legopet/npy.hpp"
#include "legopet/phantom.hpp"
#include "legopet/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace legopet::tomo {

namespace {

json config_to_json(const DatasetConfig& c) {
    return json{{"image_size", c.image_size},
                {"n_phantoms", c.n_phantoms},
                {"rotations", c.rotations},
                {"complexity", c.complexity},
                {"total_counts", c.total_counts},
                {"mlem_iters", c.mlem.n_iters},
                {"mlem_subsets", c.mlem.subsets},
                {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
                {"seed", c.seed},
                {"n_angles", c.n_angles},
                {"n_bins", c.n_bins},
                {"sino_percentile", c.sino_percentile}};
}

DatasetConfig config_from_json(const json& j) {
    DatasetConfig c;
    c.image_size = j.at("image_size");
    c.n_phantoms = j.at("n_phantoms");
    c.rotations = j.at("rotations");
    c.complexity = j.at("complexity");
    c.total_counts = j.at("total_counts");
    c.mlem.n_iters = j.at("mlem_iters");
    c.mlem.subsets = j.at("mlem_subsets");
    c.split.train = j.at("split").at("train");
    c.split.val = j.at("split").at("val");
    c.split.test = j.at("split").at("test");
    c.seed = j.at("seed");
    c.n_angles = j.at("n_angles");
    c.n_bins = j.at("n_bins");
    c.sino_percentile = j.at("sino_percentile");
    return c;
}

json item_to_json(const DatasetItem& it) {
    return json{{"index", it.index},
                {"phantom_id", it.phantom_id},
                {"rotation_index", it.rotation_index},
                {"sinogram", it.sinogram_path},
                {"reference", it.reference_path},
                {"phantom", it.phantom_path},
                {"image_scale", it.image_scale}};
}

DatasetItem item_from_json(const json& j) {
    DatasetItem it;
    it.index = j.at("index");
    it.phantom_id = j.at("phantom_id");
    it.rotation_index = j.at("rotation_index");
    it.sinogram_path = j.at("sinogram");
    it.reference_path = j.at("reference");
    it.phantom_path = j.at("phantom");
    it.image_scale = j.at("image_scale");
    return it;
}

double nearest_rank_percentile(std::vector<double> values, double q) {
    if (values.empty()) return 1.0;
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(q / 100.0 * static_cast<double>(values.size()));
    const size_t idx = static_cast<size_t>(std::max(1.0, rank)) - 1;
    return values[std::min(idx, values.size() - 1)];
}

}  // namespace

const std::vector<DatasetItem>& DatasetManifest::split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "val") return val;
    if (name == "test") return test;
    throw ConfigError("unknown split '" + name + "' (expected train/val/test)");
}

std::string dataset_config_hash(const DatasetConfig& cfg) {
    return hex64(fnv1a64(config_to_json(cfg).dump()));
}

DatasetManifest build_dataset(const DatasetConfig& cfg, const std::string& out_dir,
                              bool overwrite) {
    if (cfg.n_phantoms < 3) throw ConfigError("build_dataset: need at least 3 phantoms to split");
    if (cfg.rotations < 1) throw ConfigError("build_dataset: rotations must be >= 1");
    const double frac_sum = cfg.split.train + cfg.split.val + cfg.split.test;
    if (std::abs(frac_sum - 1.0) > 1e-9)
        throw ConfigError("build_dataset: split fractions must sum to 1");

    const fs::path root(out_dir);
    const fs::path manifest_path = root / "manifest.json";
    if (fs::exists(manifest_path) && !overwrite)
        throw DependencyError("build_dataset: " + manifest_path.string() +
                              " already exists (pass overwrite to regenerate)");
    fs::create_directories(root);

    const SystemModel model = make_system_model(cfg.image_size, cfg.n_angles, cfg.n_bins);

    // phantom-disjoint split by id: leading ids train, then val, then test
    int n_train = static_cast<int>(std::lround(cfg.split.train * cfg.n_phantoms));
    int n_val = static_cast<int>(std::lround(cfg.split.val * cfg.n_phantoms));
    n_val = std::max(n_val, 1);
    n_train = std::min(n_train, cfg.n_phantoms - 2);
    int n_test = cfg.n_phantoms - n_train - n_val;
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw ConfigError("build_dataset: split fractions leave an empty split");

    struct Staged {
        DatasetItem item;
        Array2D sino_scaled;  // counts / image_scale
        Array2D ref01;
        Array2D phantom;
    };
    std::vector<Staged> staged;
    staged.reserve(static_cast<size_t>(cfg.n_phantoms) * cfg.rotations);

    for (int p = 0; p < cfg.n_phantoms; ++p) {
        const Phantom ph = generate_phantom(derive_seed(cfg.seed, p), cfg.image_size,
                                            cfg.complexity);
        for (int r = 0; r < cfg.rotations; ++r) {
            const int index = p * cfg.rotations + r;
            Array2D rotated = r == 0 ? ph.pixels
                                     : rotate_bilinear(ph.pixels, r * 360.0 / cfg.rotations);
            Sinogram clean = forward_project(rotated, model);
            clean.source_id = "phantom_" + std::to_string(p) + "_rot_" + std::to_string(r);
            const Sinogram noisy =
                add_poisson_noise(clean, cfg.total_counts, derive_seed(cfg.seed, 1000003 + index));
            Array2D ref = mlem_reconstruct(noisy, model, cfg.mlem);

            Staged st;
            st.item.index = index;
            st.item.phantom_id = p;
            st.item.rotation_index = r;
            char name[64];
            std::snprintf(name, sizeof(name), "item_%04d", index);
            st.item.sinogram_path = std::string(name) + "_sino.npy";
            st.item.reference_path = std::string(name) + "_ref.npy";
            st.item.phantom_path = std::string(name) + "_phantom.npy";
            const double scale = std::max(max_value(ref), 1e-12);
            st.item.image_scale = scale;
            st.ref01 = ref;
            for (double& v : st.ref01.data) v /= scale;
            st.sino_scaled = noisy.counts;
            for (double& v : st.sino_scaled.data) v /= scale;
            st.phantom = std::move(rotated);
            staged.push_back(std::move(st));
        }
    }

    // dataset-wide sinogram scale: high percentile of the per-image-scaled bins
    std::vector<double> all_bins;
    all_bins.reserve(staged.size() * staged.front().sino_scaled.data.size());
    for (const auto& st : staged)
        all_bins.insert(all_bins.end(), st.sino_scaled.data.begin(), st.sino_scaled.data.end());
    const double global_scale =
        std::max(nearest_rank_percentile(std::move(all_bins), cfg.sino_percentile), 1e-12);

    DatasetManifest m;
    m.root_dir = fs::absolute(root).string();
    m.config = cfg;
    m.config_hash = dataset_config_hash(cfg);
    m.global_sino_scale = global_scale;
    m.augmentation_factor = cfg.rotations;
    m.model = model;

    for (auto& st : staged) {
        for (double& v : st.sino_scaled.data) v /= global_scale;
        npy::save_f32((root / st.item.sinogram_path).string(), st.sino_scaled);
        npy::save_f32((root / st.item.reference_path).string(), st.ref01);
        npy::save_f32((root / st.item.phantom_path).string(), st.phantom);
        const int p = st.item.phantom_id;
        auto& dest = p < n_train ? m.train : (p < n_train + n_val ? m.val : m.test);
        dest.push_back(st.item);
    }

    json j;
    j["config"] = config_to_json(cfg);
    j["config_hash"] = m.config_hash;
    j["seed"] = cfg.seed;
    j["global_sino_scale"] = m.global_sino_scale;
    j["augmentation_factor"] = m.augmentation_factor;
    j["n_angles"] = model.n_angles;
    j["n_bins"] = model.n_bins;
    j["image_size"] = model.image_size;
    j["counts"] = {{"train", m.train.size()}, {"val", m.val.size()}, {"test", m.test.size()}};
    json splits;
    for (const auto* split : {&m.train, &m.val, &m.test}) {
        json arr = json::array();
        for (const auto& it : *split) arr.push_back(item_to_json(it));
        splits[split == &m.train ? "train" : (split == &m.val ? "val" : "test")] = arr;
    }
    j["splits"] = splits;

    std::ofstream f(manifest_path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("build_dataset: failed to write manifest");
    return m;
}

DatasetManifest load_manifest(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream f(manifest_path);
    if (!f) throw DependencyError("dataset manifest not found: " + manifest_path.string());
    json j;
    f >> j;

    DatasetManifest m;
    m.root_dir = fs::absolute(dir).string();
    m.config = config_from_json(j.at("config"));
    m.config_hash = j.at("config_hash");
    m.global_sino_scale = j.at("global_sino_scale");
    m.augmentation_factor = j.at("augmentation_factor");
    m.model = make_system_model(j.at("image_size"), j.at("n_angles"), j.at("n_bins"));
    for (const auto& it : j.at("splits").at("train")) m.train.push_back(item_from_json(it));
    for (const auto& it : j.at("splits").at("val")) m.val.push_back(item_from_json(it));
    for (const auto& it : j.at("splits").at("test")) m.test.push_back(item_from_json(it));
    return m;
}

LoadedItem load_item(const DatasetManifest& m, const DatasetItem& item) {
    LoadedItem li;
    li.sinogram = npy::load_2d((fs::path(m.root_dir) / item.sinogram_path).string());
    li.reference = npy::load_2d((fs::path(m.root_dir) / item.reference_path).string());
    return li;
}

}  // namespace legopet::tomo
