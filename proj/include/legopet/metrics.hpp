#pragma once

#include <string>
#include <vector>

#include "legopet/array.hpp"

namespace legopet::metrics {

/// 10*log10(data_range^2 / MSE); +inf for identical inputs.
double psnr(const Array2D& pred, const Array2D& target, double data_range);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// valid-region convolution. Images must be at least 11x11.
double ssim(const Array2D& pred, const Array2D& target, double data_range);

/// Elementwise squared error.
Array2D error_map(const Array2D& pred, const Array2D& target);

struct ItemMetrics {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    std::string method;
    std::vector<ItemMetrics> per_item;
    double mean_psnr = 0.0, std_psnr = 0.0;
    double mean_ssim = 0.0, std_ssim = 0.0;
    double data_range = 1.0;
    long long parameter_count = 0;

    void finalize();  // recompute aggregates from per_item
};

void save_report(const MetricReport& r, const std::string& path);
MetricReport load_report(const std::string& path);

}  // namespace legopet::metrics
