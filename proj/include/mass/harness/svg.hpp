#pragma once

#include "mass/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace mass::harness {

struct SeriesPoint {
    double x;
    double y;
};

namespace detail {

inline std::string fmt(double v, int prec = 2) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace detail

/// Single-series line chart. Non-finite y values break the line into
/// separate path segments.
inline std::string render_line_chart(const std::vector<SeriesPoint>& points, const std::string& title,
                                     const std::string& y_label) {
    constexpr double width = 640, height = 360;
    constexpr double left = 70, right = 20, top = 40, bottom = 50;
    const double pw = width - left - right, ph = height - top - bottom;

    double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    bool any = false;
    for (const auto& p : points) {
        if (!std::isfinite(p.y)) continue;
        if (!any) {
            x_lo = x_hi = p.x;
            y_lo = y_hi = p.y;
            any = true;
        }
        x_lo = std::min(x_lo, p.x);
        x_hi = std::max(x_hi, p.x);
        y_lo = std::min(y_lo, p.y);
        y_hi = std::max(y_hi, p.y);
    }
    if (!points.empty()) {
        x_lo = points.front().x;
        x_hi = points.back().x;
    }
    if (x_hi == x_lo) x_hi = x_lo + 1;
    if (y_hi == y_lo) {
        const double pad = y_lo == 0.0 ? 1.0 : std::abs(y_lo) * 0.05;
        y_lo -= pad;
        y_hi += pad;
    }
    auto sx = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"360\" viewBox=\"0 0 640 360\">\n";
    svg += "<rect width=\"640\" height=\"360\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
    svg += "<g stroke=\"black\" stroke-width=\"1\">\n";
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top + ph) + "\" x2=\"" + detail::fmt(left + pw) + "\" y2=\"" + detail::fmt(top + ph) + "\"/>\n";
    svg += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(top) + "\" x2=\"" + detail::fmt(left) + "\" y2=\"" + detail::fmt(top + ph) + "\"/>\n";
    svg += "</g>\n";

    svg += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x_lo + (x_hi - x_lo) * k / 4.0;
        const double yv = y_lo + (y_hi - y_lo) * k / 4.0;
        svg += "<text x=\"" + detail::fmt(sx(xv)) + "\" y=\"" + detail::fmt(top + ph + 16) + "\" text-anchor=\"middle\">" + detail::tick_label(xv) + "</text>\n";
        svg += "<text x=\"" + detail::fmt(left - 6) + "\" y=\"" + detail::fmt(sy(yv) + 4) + "\" text-anchor=\"end\">" + detail::tick_label(yv) + "</text>\n";
    }
    svg += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"" + detail::fmt(height - 12) + "\" text-anchor=\"middle\">iteration</text>\n";
    svg += "<text x=\"16\" y=\"" + detail::fmt(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + detail::fmt(top + ph / 2) + ")\">" + y_label + "</text>\n";
    svg += "</g>\n";

    std::string d;
    bool pen_down = false;
    auto flush = [&] {
        if (!d.empty()) svg += "<path fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" d=\"" + d + "\"/>\n";
        d.clear();
        pen_down = false;
    };
    for (const auto& p : points) {
        if (!std::isfinite(p.y)) {
            flush();
            continue;
        }
        d += pen_down ? " L" : "M";
        d += detail::fmt(sx(p.x)) + " " + detail::fmt(sy(p.y));
        pen_down = true;
    }
    flush();
    svg += "</svg>\n";
    return svg;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// Writes <stem>_deviance.svg, <stem>_xi.svg and, when the trace carries test
/// MCR values, <stem>_mcr.svg. Returns the paths written.
inline std::vector<std::filesystem::path> emit_plots(const MassTrace& trace, const std::filesystem::path& dir,
                                                     const std::string& stem) {
    if (trace.empty()) throw ParameterError("emit_plots: empty trace");
    std::vector<SeriesPoint> dev, xi, err;
    bool has_mcr = false;
    for (const auto& row : trace) {
        const double it = row.iteration;
        dev.push_back({it, row.deviance});
        xi.push_back({it, row.xi_bar});
        err.push_back({it, row.test_mcr ? *row.test_mcr : std::nan("")});
        has_mcr = has_mcr || row.test_mcr.has_value();
    }
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& suffix, const std::string& text) {
        auto path = dir / (stem + "_" + suffix + ".svg");
        write_text_file(path, text);
        written.push_back(path);
    };
    put("deviance", render_line_chart(dev, stem + ": training deviance", "deviance"));
    if (has_mcr) put("mcr", render_line_chart(err, stem + ": test MCR", "test MCR"));
    put("xi", render_line_chart(xi, stem + ": sparsity target", "xi_bar"));
    return written;
}

}  // namespace mass::harness
