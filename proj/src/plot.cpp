#include "legopet/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "legopet/errors.hpp"

namespace legopet::plot {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Curve>& curves) {
    const int W = 640, H = 420;
    const int ml = 64, mr = 20, mt = 40, mb = 48;  // margins
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& c : curves)
        for (size_t i = 0; i < c.x.size(); ++i) {
            xmin = std::min(xmin, c.x[i]);
            xmax = std::max(xmax, c.x[i]);
            ymin = std::min(ymin, c.y[i]);
            ymax = std::max(ymax, c.y[i]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream f(path);
    if (!f) throw IoError("write_svg_chart: cannot open " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "' viewBox='0 0 " << W << " " << H << "'>\n"
      << "<rect width='" << W << "' height='" << H << "' fill='white'/>\n"
      << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

    // axes + ticks
    f << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
      << "' stroke='black'/>\n"
      << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
      << "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        f << "<line x1='" << px(xv) << "' y1='" << H - mb << "' x2='" << px(xv) << "' y2='"
          << H - mb + 5 << "' stroke='black'/>\n"
          << "<text x='" << px(xv) << "' y='" << H - mb + 18
          << "' text-anchor='middle' font-size='11'>" << fmt(xv) << "</text>\n"
          << "<line x1='" << ml - 5 << "' y1='" << py(yv) << "' x2='" << ml << "' y2='" << py(yv)
          << "' stroke='black'/>\n"
          << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
          << "' text-anchor='end' font-size='11'>" << fmt(yv) << "</text>\n";
    }
    f << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 10
      << "' text-anchor='middle' font-size='13'>" << x_label << "</text>\n"
      << "<text x='16' y='" << (mt + H - mb) / 2
      << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
      << (mt + H - mb) / 2 << ")'>" << y_label << "</text>\n";

    for (size_t ci = 0; ci < curves.size(); ++ci) {
        const auto& c = curves[ci];
        const char* color = kColors[ci % 6];
        f << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
        for (size_t i = 0; i < c.x.size(); ++i) f << px(c.x[i]) << "," << py(c.y[i]) << " ";
        f << "'/>\n";
        for (size_t i = 0; i < c.x.size(); ++i)
            f << "<circle cx='" << px(c.x[i]) << "' cy='" << py(c.y[i]) << "' r='3' fill='"
              << color << "'/>\n";
        const int ly = mt + 18 * static_cast<int>(ci);
        f << "<rect x='" << W - mr - 150 << "' y='" << ly << "' width='12' height='3' fill='"
          << color << "'/>\n"
          << "<text x='" << W - mr - 132 << "' y='" << ly + 6 << "' font-size='12'>" << c.label
          << "</text>\n";
    }
    f << "</svg>\n";
    if (!f) throw IoError("write_svg_chart: short write: " + path);
}

void write_pgm(const std::string& path, const Array2D& img, double lo, double hi) {
    if (hi <= lo) {
        lo = *std::min_element(img.data.begin(), img.data.end());
        hi = *std::max_element(img.data.begin(), img.data.end());
        if (hi <= lo) hi = lo + 1;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_pgm: cannot open " + path);
    f << "P5\n" << img.cols << " " << img.rows << "\n255\n";
    for (double v : img.data) {
        const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
        f.put(static_cast<char>(std::lround(t * 255.0)));
    }
    if (!f) throw IoError("write_pgm: short write: " + path);
}

Array2D montage(const std::vector<std::vector<Tile>>& rows, int gutter) {
    int total_h = gutter, total_w = 0;
    for (const auto& row : rows) {
        int row_h = 0, row_w = gutter;
        for (const auto& t : row) {
            row_h = std::max(row_h, t.image->rows);
            row_w += t.image->cols + gutter;
        }
        total_h += row_h + gutter;
        total_w = std::max(total_w, row_w);
    }
    Array2D out(total_h, total_w, 1.0);  // white background
    int y = gutter;
    for (const auto& row : rows) {
        int x = gutter, row_h = 0;
        for (const auto& t : row) {
            double lo = t.lo, hi = t.hi;
            if (hi <= lo) {
                lo = *std::min_element(t.image->data.begin(), t.image->data.end());
                hi = *std::max_element(t.image->data.begin(), t.image->data.end());
                if (hi <= lo) hi = lo + 1;
            }
            for (int r = 0; r < t.image->rows; ++r)
                for (int c = 0; c < t.image->cols; ++c)
                    out.at(y + r, x + c) =
                        std::clamp((t.image->at(r, c) - lo) / (hi - lo), 0.0, 1.0);
            x += t.image->cols + gutter;
            row_h = std::max(row_h, t.image->rows);
        }
        y += row_h + gutter;
    }
    return out;
}

}  // namespace legopet::plot
