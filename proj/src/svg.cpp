#include "batlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace batlab {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

int column(const ParsedCsv& csv, const std::string& name) {
    for (std::size_t i = 0; i < csv.header.size(); ++i)
        if (csv.header[i] == name) return static_cast<int>(i);
    throw std::runtime_error("svg: missing CSV column '" + name + "'");
}

double cell(const ParsedCsv& csv, std::size_t row, int col) {
    const std::string& s = csv.rows[row][static_cast<std::size_t>(col)];
    try {
        return std::stod(s);
    } catch (...) {
        throw std::runtime_error("svg: non-numeric cell at data line " +
                                 std::to_string(row + 2));
    }
}

constexpr double kW = 640.0, kH = 640.0, kPad = 48.0;

std::string svg_open() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 640\">\n"
           "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
}

// torus overlay of line segments, wrap-aware
std::string segments_overlay(const ParsedCsv& csv) {
    int cax = column(csv, "anchor_x"), cay = column(csv, "anchor_y");
    int cdx = column(csv, "dir_x"), cdy = column(csv, "dir_y");
    int cl = column(csv, "length");
    double scale = kW - 2 * kPad;
    auto px = [&](double u) { return kPad + u * scale; };
    auto py = [&](double u) { return kH - kPad - u * scale; };
    std::string out = svg_open();
    const char* colors[4] = {"#c62828", "#1565c0", "#2e7d32", "#ef6c00"};
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        double ax = cell(csv, r, cax), ay = cell(csv, r, cay);
        double dx = cell(csv, r, cdx), dy = cell(csv, r, cdy);
        double len = cell(csv, r, cl);
        const char* color = colors[r % 4];
        // split the lift at unit-cell boundaries so every piece draws inside
        double s = 0.0;
        double x = ax, y = ay;
        int guard = 0;
        while (s < len - 1e-12 && ++guard < 4096) {
            double step = len - s;
            if (dx > 1e-15) step = std::min(step, (std::floor(x) + 1.0 - x) / dx);
            if (dx < -1e-15) step = std::min(step, (std::floor(x) - x) / dx);
            if (dy > 1e-15) step = std::min(step, (std::floor(y) + 1.0 - y) / dy);
            if (dy < -1e-15) step = std::min(step, (std::floor(y) - y) / dy);
            step = std::max(step, 1e-9);
            double fx = x - std::floor(x), fy = y - std::floor(y);
            out += "<line x1=\"" + num(px(fx)) + "\" y1=\"" + num(py(fy)) + "\" x2=\"" +
                   num(px(fx + step * dx)) + "\" y2=\"" + num(py(fy + step * dy)) +
                   "\" stroke=\"" + color + "\" stroke-width=\"1\"/>\n";
            x += step * dx;
            y += step * dy;
            s += step;
        }
    }
    out += "<rect x=\"" + num(kPad) + "\" y=\"" + num(kPad) + "\" width=\"" + num(scale) +
           "\" height=\"" + num(scale) + "\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
    return out;
}

std::string scatter_plot(const ParsedCsv& csv, const std::string& xcol,
                         const std::string& ycol, bool log_y, bool log_x) {
    int cx = column(csv, xcol), cy = column(csv, ycol);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        double x = cell(csv, r, cx), y = cell(csv, r, cy);
        if (log_y) {
            if (std::fabs(y) < 1e-300) continue;
            y = std::log10(std::fabs(y));
        }
        if (log_x) {
            if (x <= 0) continue;
            x = std::log10(x);
        }
        pts.emplace_back(x, y);
    }
    if (pts.empty()) throw std::runtime_error("svg: no plottable rows");
    double xlo = pts[0].first, xhi = xlo, ylo = pts[0].second, yhi = ylo;
    for (auto& [x, y] : pts) {
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    if (xhi - xlo < 1e-12) xhi = xlo + 1.0;
    if (yhi - ylo < 1e-12) yhi = ylo + 1.0;
    double scale = kW - 2 * kPad;
    auto px = [&](double u) { return kPad + (u - xlo) / (xhi - xlo) * scale; };
    auto py = [&](double u) { return kH - kPad - (u - ylo) / (yhi - ylo) * scale; };
    std::string out = svg_open();
    std::string path = "M";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) path += " L";
        path += num(px(pts[i].first)) + " " + num(py(pts[i].second));
    }
    out += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1565c0\" stroke-width=\"1.5\"/>\n";
    for (auto& [x, y] : pts)
        out += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) +
               "\" r=\"3\" fill=\"#c62828\"/>\n";
    out += "<rect x=\"" + num(kPad) + "\" y=\"" + num(kPad) + "\" width=\"" + num(scale) +
           "\" height=\"" + num(scale) + "\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
    return out;
}

}  // namespace

std::string render_svg(const ParsedCsv& csv, const std::string& kind) {
    if (kind == "segments-overlay") return segments_overlay(csv);
    if (kind == "semilog-decay") return scatter_plot(csv, "n", "value", true, false);
    if (kind == "mass-vs-logN") return scatter_plot(csv, "N", "mass", false, true);
    throw std::runtime_error("svg: unrecognised plot kind '" + kind + "'");
}

}  // namespace batlab
