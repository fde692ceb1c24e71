#include "legopet/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "legopet/errors.hpp"

using nlohmann::json;

namespace legopet::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::vector<double> gaussian_window() {
    std::vector<double> w(kWindow * kWindow);
    const int half = kWindow / 2;
    double total = 0.0;
    for (int y = 0; y < kWindow; ++y)
        for (int x = 0; x < kWindow; ++x) {
            const double dy = y - half, dx = x - half;
            w[y * kWindow + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            total += w[y * kWindow + x];
        }
    for (double& v : w) v /= total;
    return w;
}

}  // namespace

double psnr(const Array2D& pred, const Array2D& target, double data_range) {
    require_same_shape(pred, target, "psnr");
    if (data_range <= 0.0) throw ConfigError("psnr: data_range must be > 0");
    double se = 0.0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(pred.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

double ssim(const Array2D& pred, const Array2D& target, double data_range) {
    require_same_shape(pred, target, "ssim");
    if (pred.rows < kWindow || pred.cols < kWindow)
        throw ConfigError("ssim: images must be at least 11x11");
    static const std::vector<double> win = gaussian_window();
    const double c1 = (kK1 * data_range) * (kK1 * data_range);
    const double c2 = (kK2 * data_range) * (kK2 * data_range);

    double acc = 0.0;
    long long count = 0;
    for (int r = 0; r + kWindow <= pred.rows; ++r) {
        for (int c = 0; c + kWindow <= pred.cols; ++c) {
            double mu1 = 0, mu2 = 0, e11 = 0, e22 = 0, e12 = 0;
            for (int y = 0; y < kWindow; ++y)
                for (int x = 0; x < kWindow; ++x) {
                    const double w = win[y * kWindow + x];
                    const double a = pred.at(r + y, c + x);
                    const double b = target.at(r + y, c + x);
                    mu1 += w * a;
                    mu2 += w * b;
                    e11 += w * a * a;
                    e22 += w * b * b;
                    e12 += w * a * b;
                }
            const double v1 = e11 - mu1 * mu1;
            const double v2 = e22 - mu2 * mu2;
            const double cov = e12 - mu1 * mu2;
            const double num = (2 * mu1 * mu2 + c1) * (2 * cov + c2);
            const double den = (mu1 * mu1 + mu2 * mu2 + c1) * (v1 + v2 + c2);
            acc += num / den;
            ++count;
        }
    }
    return acc / static_cast<double>(count);
}

Array2D error_map(const Array2D& pred, const Array2D& target) {
    require_same_shape(pred, target, "error_map");
    Array2D out(pred.rows, pred.cols);
    for (size_t i = 0; i < out.data.size(); ++i) {
        const double d = pred.data[i] - target.data[i];
        out.data[i] = d * d;
    }
    return out;
}

void MetricReport::finalize() {
    const double n = static_cast<double>(per_item.size());
    if (per_item.empty()) return;
    double sp = 0, ss = 0;
    for (const auto& it : per_item) {
        sp += it.psnr;
        ss += it.ssim;
    }
    mean_psnr = sp / n;
    mean_ssim = ss / n;
    double vp = 0, vs = 0;
    for (const auto& it : per_item) {
        vp += (it.psnr - mean_psnr) * (it.psnr - mean_psnr);
        vs += (it.ssim - mean_ssim) * (it.ssim - mean_ssim);
    }
    std_psnr = std::sqrt(vp / n);
    std_ssim = std::sqrt(vs / n);
}

namespace {
// JSON has no infinity literal; the +inf PSNR sentinel round-trips as "inf".
json num_or_inf(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}
double parse_num_or_inf(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        return s == "-inf" ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    }
    return j.get<double>();
}
}  // namespace

void save_report(const MetricReport& r, const std::string& path) {
    json items = json::array();
    for (const auto& it : r.per_item)
        items.push_back({{"id", it.id}, {"psnr", num_or_inf(it.psnr)}, {"ssim", it.ssim}});
    json j{{"method", r.method},
           {"per_item", items},
           {"aggregate",
            {{"mean_psnr", num_or_inf(r.mean_psnr)},
             {"std_psnr", num_or_inf(r.std_psnr)},
             {"mean_ssim", r.mean_ssim},
             {"std_ssim", r.std_ssim}}},
           {"data_range", r.data_range},
           {"parameter_count", r.parameter_count}};
    std::ofstream f(path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("save_report: cannot write " + path);
}

MetricReport load_report(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DependencyError("metric report not found: " + path);
    json j;
    f >> j;
    MetricReport r;
    r.method = j.at("method");
    for (const auto& it : j.at("per_item"))
        r.per_item.push_back({it.at("id"), parse_num_or_inf(it.at("psnr")), it.at("ssim")});
    r.mean_psnr = parse_num_or_inf(j.at("aggregate").at("mean_psnr"));
    r.std_psnr = parse_num_or_inf(j.at("aggregate").at("std_psnr"));
    r.mean_ssim = j.at("aggregate").at("mean_ssim");
    r.std_ssim = j.at("aggregate").at("std_ssim");
    r.data_range = j.at("data_range");
    r.parameter_count = j.at("parameter_count");
    return r;
}

}  // namespace legopet::metrics
