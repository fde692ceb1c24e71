#include "legopet/projector.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "legopet/errors.hpp"

namespace legopet::tomo {

namespace {

struct Trig {
    std::vector<double> cos_t, sin_t;
};

Trig angle_tables(const SystemModel& m) {
    Trig t;
    t.cos_t.resize(m.n_angles);
    t.sin_t.resize(m.n_angles);
    for (int a = 0; a < m.n_angles; ++a) {
        const double th = M_PI * a / m.n_angles;
        t.cos_t[a] = std::cos(th);
        t.sin_t[a] = std::sin(th);
    }
    return t;
}

void check_image(const Array2D& img, const SystemModel& m, const char* where) {
    if (img.rows != m.image_size || img.cols != m.image_size)
        throw ShapeError(std::string(where) + ": image is " + std::to_string(img.rows) + "x" +
                         std::to_string(img.cols) + ", model expects " +
                         std::to_string(m.image_size) + "x" + std::to_string(m.image_size));
}

void check_sino(const Array2D& s, const SystemModel& m, const char* where) {
    if (s.rows != m.n_angles || s.cols != m.n_bins)
        throw ShapeError(std::string(where) + ": sinogram is " + std::to_string(s.rows) + "x" +
                         std::to_string(s.cols) + ", model expects " +
                         std::to_string(m.n_angles) + "x" + std::to_string(m.n_bins));
}

}  // namespace

SystemModel make_system_model(int image_size, int n_angles, int n_bins) {
    if (image_size < 2) throw ConfigError("make_system_model: image_size must be >= 2");
    SystemModel m;
    m.image_size = image_size;
    m.n_angles = n_angles > 0 ? n_angles : image_size;
    if (n_bins > 0) {
        m.n_bins = n_bins;
    } else {
        int nb = static_cast<int>(std::ceil(image_size * std::sqrt(2.0)));
        if (nb % 2) ++nb;
        m.n_bins = nb;
    }
    if (m.n_bins < image_size) throw ConfigError("make_system_model: n_bins must be >= image_size");
    return m;
}

Array2D forward_project_angles(const Array2D& image, const SystemModel& model,
                               const std::vector<int>& angles) {
    check_image(image, model, "forward_project");
    const Trig t = angle_tables(model);
    const double center = (model.image_size - 1) / 2.0;
    const double bin_center = (model.n_bins - 1) / 2.0;

    Array2D out(static_cast<int>(angles.size()), model.n_bins, 0.0);
    for (size_t k = 0; k < angles.size(); ++k) {
        const int a = angles[k];
        const double ct = t.cos_t[a], st = t.sin_t[a];
        double* row = &out.at(static_cast<int>(k), 0);
        for (int r = 0; r < model.image_size; ++r) {
            const double y = r - center;
            for (int c = 0; c < model.image_size; ++c) {
                const double v = image.at(r, c);
                if (v == 0.0) continue;
                const double x = c - center;
                const double u = -x * st + y * ct + bin_center;
                const int b0 = static_cast<int>(std::floor(u));
                const double w1 = u - b0;
                if (b0 >= 0 && b0 < model.n_bins) row[b0] += v * (1.0 - w1);
                if (b0 + 1 >= 0 && b0 + 1 < model.n_bins) row[b0 + 1] += v * w1;
            }
        }
    }
    return out;
}

Array2D back_project_angles(const Array2D& subset_counts, const SystemModel& model,
                            const std::vector<int>& angles) {
    if (subset_counts.rows != static_cast<int>(angles.size()) || subset_counts.cols != model.n_bins)
        throw ShapeError("back_project: subset sinogram shape does not match angle list");
    const Trig t = angle_tables(model);
    const double center = (model.image_size - 1) / 2.0;
    const double bin_center = (model.n_bins - 1) / 2.0;

    Array2D img(model.image_size, model.image_size, 0.0);
    for (size_t k = 0; k < angles.size(); ++k) {
        const int a = angles[k];
        const double ct = t.cos_t[a], st = t.sin_t[a];
        const double* row = &subset_counts.at(static_cast<int>(k), 0);
        for (int r = 0; r < model.image_size; ++r) {
            const double y = r - center;
            for (int c = 0; c < model.image_size; ++c) {
                const double x = c - center;
                const double u = -x * st + y * ct + bin_center;
                const int b0 = static_cast<int>(std::floor(u));
                const double w1 = u - b0;
                double acc = 0.0;
                if (b0 >= 0 && b0 < model.n_bins) acc += row[b0] * (1.0 - w1);
                if (b0 + 1 >= 0 && b0 + 1 < model.n_bins) acc += row[b0 + 1] * w1;
                img.at(r, c) += acc;
            }
        }
    }
    return img;
}

namespace {
std::vector<int> all_angles(const SystemModel& m) {
    std::vector<int> v(m.n_angles);
    for (int a = 0; a < m.n_angles; ++a) v[a] = a;
    return v;
}
}  // namespace

Sinogram forward_project(const Array2D& image, const SystemModel& model) {
    Sinogram out;
    out.counts = forward_project_angles(image, model, all_angles(model));
    out.is_noisy = false;
    return out;
}

Array2D back_project(const Array2D& counts, const SystemModel& model) {
    check_sino(counts, model, "back_project");
    return back_project_angles(counts, model, all_angles(model));
}

Array2D back_project(const Sinogram& sino, const SystemModel& model) {
    return back_project(sino.counts, model);
}

Array2D sensitivity_map(const SystemModel& model) {
    Array2D ones(model.n_angles, model.n_bins, 1.0);
    return back_project(ones, model);
}

Sinogram add_poisson_noise(const Sinogram& sino, double target_total_counts, uint64_t seed) {
    if (sino.is_noisy) throw ConfigError("add_poisson_noise: input already noisy");
    if (target_total_counts <= 0.0)
        throw ConfigError("add_poisson_noise: target_total_counts must be > 0");
    const double total = sum(sino.counts);
    if (total <= 0.0) throw DegenerateInputError("add_poisson_noise: zero-sum sinogram");

    const double scale = target_total_counts / total;
    std::mt19937_64 g(seed);
    Sinogram out;
    out.counts = Array2D(sino.counts.rows, sino.counts.cols, 0.0);
    out.is_noisy = true;
    out.source_id = sino.source_id;
    out.noise_scale = scale;
    double acc = 0.0;
    for (size_t i = 0; i < sino.counts.data.size(); ++i) {
        const double mean = sino.counts.data[i] * scale;
        if (mean > 0.0) {
            std::poisson_distribution<long long> pd(mean);
            out.counts.data[i] = static_cast<double>(pd(g));
        }
        acc += out.counts.data[i];
    }
    out.total_counts = acc;
    return out;
}

}  // namespace legopet::tomo
