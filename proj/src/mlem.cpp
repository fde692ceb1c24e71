#include "legopet/mlem.hpp"

#include <cmath>

#include "legopet/errors.hpp"

namespace legopet::tomo {

namespace {

std::vector<std::vector<int>> make_subsets(int n_angles, int subsets) {
    // round-robin interleave for balanced angular coverage per subset
    std::vector<std::vector<int>> out(subsets);
    for (int a = 0; a < n_angles; ++a) out[a % subsets].push_back(a);
    return out;
}

Array2D gather_rows(const Array2D& sino, const std::vector<int>& angles) {
    Array2D out(static_cast<int>(angles.size()), sino.cols, 0.0);
    for (size_t k = 0; k < angles.size(); ++k)
        for (int b = 0; b < sino.cols; ++b) out.at(static_cast<int>(k), b) = sino.at(angles[k], b);
    return out;
}

}  // namespace

Array2D mlem_reconstruct(const Sinogram& sino, const SystemModel& model, const MlemOptions& opt) {
    if (opt.n_iters < 1) throw ConfigError("mlem_reconstruct: n_iters must be >= 1");
    if (opt.subsets < 1 || model.n_angles % opt.subsets != 0)
        throw ConfigError("mlem_reconstruct: subsets must be >= 1 and divide n_angles (" +
                          std::to_string(opt.subsets) + " vs " + std::to_string(model.n_angles) +
                          ")");
    if (sino.counts.rows != model.n_angles || sino.counts.cols != model.n_bins)
        throw ShapeError("mlem_reconstruct: sinogram shape does not match model");
    for (double v : sino.counts.data)
        if (v < 0.0) throw ConfigError("mlem_reconstruct: sinogram must be nonnegative");

    const auto subsets = make_subsets(model.n_angles, opt.subsets);
    std::vector<Array2D> subset_data, subset_sens;
    subset_data.reserve(subsets.size());
    subset_sens.reserve(subsets.size());
    for (const auto& ang : subsets) {
        subset_data.push_back(gather_rows(sino.counts, ang));
        Array2D ones(static_cast<int>(ang.size()), model.n_bins, 1.0);
        subset_sens.push_back(back_project_angles(ones, model, ang));
    }

    Array2D x(model.image_size, model.image_size, 1.0);
    Array2D ratio;
    for (int it = 0; it < opt.n_iters; ++it) {
        for (size_t s = 0; s < subsets.size(); ++s) {
            Array2D proj = forward_project_angles(x, model, subsets[s]);
            ratio = subset_data[s];
            for (size_t i = 0; i < ratio.data.size(); ++i) {
                const double denom = proj.data[i];
                ratio.data[i] = denom > 0.0 ? ratio.data[i] / denom : 0.0;  // 0/0 := 0
            }
            const Array2D corr = back_project_angles(ratio, model, subsets[s]);
            for (size_t i = 0; i < x.data.size(); ++i) {
                const double sens = subset_sens[s].data[i];
                x.data[i] = sens > 0.0 ? x.data[i] * corr.data[i] / sens : 0.0;
            }
        }
    }
    return x;
}

double poisson_log_likelihood(const Sinogram& sino, const SystemModel& model, const Array2D& x) {
    const Sinogram proj = forward_project(x, model);
    double ll = 0.0;
    for (size_t i = 0; i < proj.counts.data.size(); ++i) {
        const double y = sino.counts.data[i];
        const double mu = proj.counts.data[i];
        if (y > 0.0) ll += y * std::log(mu > 0.0 ? mu : 1e-300);
        ll -= mu;
    }
    return ll;
}

}  // namespace legopet::tomo
