#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "legopet/array.hpp"
#include "legopet/mlem.hpp"
#include "legopet/projector.hpp"

namespace legopet::tomo {

struct SplitFractions {
    double train = 0.85;
    double val = 0.05;
    double test = 0.10;
};

struct DatasetConfig {
    int image_size = 64;
    int n_phantoms = 20;
    int rotations = 5;
    int complexity = 3;
    double total_counts = 1e6;
    MlemOptions mlem;            // reference reconstruction settings
    SplitFractions split;
    uint64_t seed = 0;
    int n_angles = 0;            // 0 = image_size
    int n_bins = 0;              // 0 = ceil(image_size*sqrt(2)) rounded to even
    double sino_percentile = 99.9;
};

struct DatasetItem {
    int index = 0;
    int phantom_id = 0;
    int rotation_index = 0;
    std::string sinogram_path;   // relative to the dataset directory
    std::string reference_path;
    std::string phantom_path;
    double image_scale = 1.0;    // max of the raw MLEM reference
};

struct DatasetManifest {
    std::string root_dir;
    DatasetConfig config;
    std::string config_hash;
    double global_sino_scale = 1.0;
    int augmentation_factor = 1;
    SystemModel model;
    std::vector<DatasetItem> train, val, test;

    const std::vector<DatasetItem>& split(const std::string& name) const;
};

/// Generates phantoms, simulates noisy sinograms, reconstructs MLEM
/// references, normalizes, and writes arrays + manifest into out_dir.
/// Refuses to clobber an existing dataset unless overwrite is set.
DatasetManifest build_dataset(const DatasetConfig& cfg, const std::string& out_dir,
                              bool overwrite = false);

DatasetManifest load_manifest(const std::string& dir);

std::string dataset_config_hash(const DatasetConfig& cfg);

/// Loads the normalized (sinogram, reference) pair of one item.
struct LoadedItem {
    Array2D sinogram;
    Array2D reference;
};
LoadedItem load_item(const DatasetManifest& m, const DatasetItem& item);

}  // namespace legopet::tomo
