#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "legopet/array.hpp"

namespace legopet::tomo {

/// Parallel-beam line-integral geometry. Angles span [0, pi) uniformly;
/// detector bins are unit-spaced and centered. Projection weights are
/// pixel-driven with bilinear detector-bin splatting, so back_project is the
/// exact transpose of forward_project by construction.
struct SystemModel {
    int n_angles = 0;
    int n_bins = 0;
    int image_size = 0;
};

/// n_angles defaults to image_size, n_bins to ceil(image_size*sqrt(2))
/// rounded up to even; the default detector always covers the whole image
/// (every pixel has positive total sensitivity).
SystemModel make_system_model(int image_size, int n_angles = 0, int n_bins = 0);

struct Sinogram {
    Array2D counts;  // n_angles x n_bins
    bool is_noisy = false;
    std::string source_id;
    double total_counts = 0.0;
    double noise_scale = 1.0;  // factor applied to reach the Poisson target
};

Sinogram forward_project(const Array2D& image, const SystemModel& model);
Array2D back_project(const Sinogram& sino, const SystemModel& model);
Array2D back_project(const Array2D& counts, const SystemModel& model);

/// Subset forms used by OSEM: project only the listed angle indices. Row k of
/// the subset sinogram corresponds to angles[k]. Same weights as the full
/// operator, so the adjoint pairing holds subset-wise too.
Array2D forward_project_angles(const Array2D& image, const SystemModel& model,
                               const std::vector<int>& angles);
Array2D back_project_angles(const Array2D& subset_counts, const SystemModel& model,
                            const std::vector<int>& angles);

/// Per-pixel total sensitivity, i.e. back projection of an all-ones sinogram.
Array2D sensitivity_map(const SystemModel& model);

/// Poisson resampling at a target total count; scales the noiseless input so
/// its sum matches target_total_counts, then draws one Poisson sample per bin.
Sinogram add_poisson_noise(const Sinogram& sino, double target_total_counts, uint64_t seed);

}  // namespace legopet::tomo
