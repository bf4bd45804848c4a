#pragma once

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace pemsim {

// Density scatter plot as a standalone SVG: points binned on a 50x50 grid,
// bin fill interpolated from blue (sparse) to yellow (dense). Output is a
// pure function of the inputs.
namespace svg_detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string axis_fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string density_color(double t) {
    // blue (43, 63, 149) -> yellow (250, 222, 56)
    const int r = static_cast<int>(43 + t * (250 - 43));
    const int g = static_cast<int>(63 + t * (222 - 63));
    const int b = static_cast<int>(149 + t * (56 - 149));
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

inline std::string unit_suffix(const std::string& stat) {
    const auto ends_with = [&](const char* suffix) {
        const std::string s(suffix);
        return stat.size() >= s.size() && stat.compare(stat.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with("_m")) return " (m)";
    if (ends_with("_s")) return " (s)";
    return "";
}

}  // namespace svg_detail

inline std::string scatter_svg(const std::vector<double>& xs, const std::vector<double>& ys,
                               const std::string& x_label, const std::string& y_label) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("scatter_svg: empty or mismatched point selection");

    constexpr int kBins = 50;
    constexpr double kWidth = 640, kHeight = 480;
    constexpr double kLeft = 70, kRight = 20, kTop = 20, kBottom = 55;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xmin = std::min(xmin, xs[i]);
        xmax = std::max(xmax, xs[i]);
        ymin = std::min(ymin, ys[i]);
        ymax = std::max(ymax, ys[i]);
    }
    if (xmax <= xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax <= ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }

    std::vector<int> counts(kBins * kBins, 0);
    int max_count = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        int bx = static_cast<int>((xs[i] - xmin) / (xmax - xmin) * kBins);
        int by = static_cast<int>((ys[i] - ymin) / (ymax - ymin) * kBins);
        bx = std::clamp(bx, 0, kBins - 1);
        by = std::clamp(by, 0, kBins - 1);
        max_count = std::max(max_count, ++counts[by * kBins + bx]);
    }

    using svg_detail::axis_fmt;
    using svg_detail::fmt;
    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";

    const double cell_w = plot_w / kBins, cell_h = plot_h / kBins;
    for (int by = 0; by < kBins; ++by) {
        for (int bx = 0; bx < kBins; ++bx) {
            const int c = counts[by * kBins + bx];
            if (c == 0) continue;
            const double t = max_count > 1 ? static_cast<double>(c - 1) / (max_count - 1) : 1.0;
            const double px = kLeft + bx * cell_w;
            const double py = kTop + plot_h - (by + 1) * cell_h;
            out += "<rect class=\"bin\" x=\"" + fmt(px) + "\" y=\"" + fmt(py) + "\" width=\"" +
                   fmt(cell_w) + "\" height=\"" + fmt(cell_h) + "\" fill=\"" +
                   svg_detail::density_color(t) + "\"/>\n";
        }
    }

    // Axes and ticks.
    out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" +
           fmt(kLeft + plot_w) + "\" y2=\"" + fmt(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) +
           "\" y2=\"" + fmt(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = i / 4.0;
        const double px = kLeft + fx * plot_w;
        const double py = kTop + plot_h - fx * plot_h;
        out += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" + fmt(px) +
               "\" y2=\"" + fmt(kTop + plot_h + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(kTop + plot_h + 18) +
               "\" font-size=\"11\" text-anchor=\"middle\">" +
               axis_fmt(xmin + fx * (xmax - xmin)) + "</text>\n";
        out += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(kLeft) +
               "\" y2=\"" + fmt(py) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(py + 4) +
               "\" font-size=\"11\" text-anchor=\"end\">" + axis_fmt(ymin + fx * (ymax - ymin)) +
               "</text>\n";
    }
    out += "<text x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"" + fmt(kHeight - 12) +
           "\" font-size=\"13\" text-anchor=\"middle\">" + x_label +
           svg_detail::unit_suffix(x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + fmt(kTop + plot_h / 2) +
           "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fmt(kTop + plot_h / 2) + ")\">" + y_label + svg_detail::unit_suffix(y_label) +
           "</text>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace pemsim
