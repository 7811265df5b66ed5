#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "trwf/errors.hpp"
#include "trwf/phase_space.hpp"

namespace trwf {

// One named column of a CSV table. All columns must share a length.
struct CsvColumn {
    std::string name;
    std::vector<double> values;
};

namespace detail {

// Shortest round-trip decimal form; bundles must be byte-stable across runs.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigInvalid("cannot open " + path + " for writing");
    return out;
}

} // namespace detail

inline void write_csv(const std::string& path, const std::vector<CsvColumn>& cols) {
    if (cols.empty()) throw ConfigInvalid("write_csv needs at least one column");
    const std::size_t n = cols[0].values.size();
    for (const auto& c : cols)
        if (c.values.size() != n)
            throw GridMismatch("csv column " + c.name + " length differs");
    std::ofstream out = detail::open_out(path);
    for (std::size_t k = 0; k < cols.size(); ++k)
        out << cols[k].name << (k + 1 < cols.size() ? "," : "\n");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < cols.size(); ++k)
            out << detail::fmt_double(cols[k].values[i]) << (k + 1 < cols.size() ? "," : "\n");
}

// Long-format dump of a phase-space grid: one row per (x, p) node.
inline void write_csv(const std::string& path, const WignerGrid& W) {
    std::ofstream out = detail::open_out(path);
    out << "x,p,w\n";
    for (std::size_t i = 0; i < W.x_axis.n; ++i)
        for (std::size_t j = 0; j < W.p_axis.n; ++j)
            out << detail::fmt_double(W.x_axis.node(i)) << ','
                << detail::fmt_double(W.p_axis.node(j)) << ','
                << detail::fmt_double(W.values(i, j)) << '\n';
}

// Minimal line-plot SVG: fixed canvas, auto-scaled axes, one polyline per
// series. Figures are for human inspection; acceptance reads the CSVs.
struct SvgSeries {
    std::string label;
    const std::vector<double>* y = nullptr;
};

inline void svg_line_plot(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::vector<double>& x,
                          const std::vector<SvgSeries>& series) {
    if (x.empty() || series.empty()) throw ConfigInvalid("svg_line_plot needs data");
    for (const auto& s : series)
        if (!s.y || s.y->size() != x.size())
            throw GridMismatch("svg series " + s.label + " length differs from x");

    double ylo = 1e300, yhi = -1e300;
    for (const auto& s : series)
        for (double v : *s.y) { ylo = std::min(ylo, v); yhi = std::max(yhi, v); }
    if (!(yhi > ylo)) { yhi = ylo + 1.0; ylo -= 1.0; }
    const double pad = 0.06 * (yhi - ylo);
    ylo -= pad; yhi += pad;
    const double xlo = x.front(), xhi = x.back();

    const double W = 800, H = 500, ml = 70, mr = 20, mt = 40, mb = 50;
    auto px = [&](double v) { return ml + (v - xlo) / (xhi - xlo) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (v - ylo) / (yhi - ylo) * (H - mt - mb); };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    std::ostringstream sv;
    sv << std::setprecision(6);
    sv << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
       << "' viewBox='0 0 " << W << ' ' << H << "'>\n"
       << "<rect width='100%' height='100%' fill='white'/>\n"
       << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16' "
          "font-family='sans-serif'>" << title << "</text>\n";

    // axes and ticks
    sv << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
       << "' stroke='black'/>\n"
       << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = xlo + k * (xhi - xlo) / 5.0, yv = ylo + k * (yhi - ylo) / 5.0;
        sv << "<line x1='" << px(xv) << "' y1='" << H - mb << "' x2='" << px(xv) << "' y2='"
           << H - mb + 5 << "' stroke='black'/>\n"
           << "<text x='" << px(xv) << "' y='" << H - mb + 20
           << "' text-anchor='middle' font-size='11' font-family='sans-serif'>"
           << std::defaultfloat << xv << "</text>\n"
           << "<line x1='" << ml - 5 << "' y1='" << py(yv) << "' x2='" << ml << "' y2='" << py(yv)
           << "' stroke='black'/>\n"
           << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
           << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << yv << "</text>\n";
    }
    sv << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 10
       << "' text-anchor='middle' font-size='13' font-family='sans-serif'>" << x_label
       << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        sv << "<polyline fill='none' stroke='" << palette[si % 5] << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < x.size(); ++i)
            sv << px(x[i]) << ',' << py((*series[si].y)[i]) << ' ';
        sv << "'/>\n";
        sv << "<text x='" << W - mr - 10 << "' y='" << mt + 16 * (si + 1)
           << "' text-anchor='end' font-size='12' font-family='sans-serif' fill='"
           << palette[si % 5] << "'>" << series[si].label << "</text>\n";
    }
    sv << "</svg>\n";

    std::ofstream out = detail::open_out(path);
    out << sv.str();
}

// Phase-space heatmap with a dashed zero contour (marching squares). The
// diverging palette is symmetric about zero so negativity is legible.
inline void svg_contour_plot(const std::string& path, const std::string& title,
                             const WignerGrid& W) {
    const std::size_t nx = W.x_axis.n, np = W.p_axis.n;
    if (nx < 2 || np < 2) throw GridMismatch("contour plot needs a 2D grid");
    const double vmax = std::max(W.values.maxCoeff(), -W.values.minCoeff());

    const double S = 560, m = 60;
    const double cw = (S - 2 * m) / double(nx), ch = (S - 2 * m) / double(np);
    auto px = [&](std::size_t i) { return m + i * cw; };
    auto py = [&](std::size_t j) { return S - m - (j + 1) * ch; };

    std::ostringstream sv;
    sv << std::setprecision(6);
    sv << "<svg xmlns='http://www.w3.org/2000/svg' width='" << S << "' height='" << S
       << "' viewBox='0 0 " << S << ' ' << S << "'>\n"
       << "<rect width='100%' height='100%' fill='white'/>\n"
       << "<text x='" << S / 2 << "' y='28' text-anchor='middle' font-size='15' "
          "font-family='sans-serif'>" << title << "</text>\n";

    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < np; ++j) {
            const double z = vmax > 0.0 ? W.values(i, j) / vmax : 0.0;
            // blue (negative) .. white .. red (positive)
            const int r = int(255 * std::min(1.0, 1.0 + std::min(z, 0.0)));
            const int b = int(255 * std::min(1.0, 1.0 - std::max(z, 0.0)));
            const int g = std::min(r, b);
            sv << "<rect x='" << px(i) << "' y='" << py(j) << "' width='" << cw + 0.5
               << "' height='" << ch + 0.5 << "' fill='rgb(" << r << ',' << g << ',' << b
               << ")'/>\n";
        }

    // zero contour segments
    sv << "<g stroke='black' stroke-width='1' stroke-dasharray='4,3'>\n";
    for (std::size_t i = 0; i + 1 < nx; ++i)
        for (std::size_t j = 0; j + 1 < np; ++j) {
            const double v00 = W.values(i, j), v10 = W.values(i + 1, j);
            const double v01 = W.values(i, j + 1), v11 = W.values(i + 1, j + 1);
            std::vector<std::pair<double, double>> pts;
            auto edge = [&](double a, double b, double x0, double y0, double x1, double y1) {
                if ((a < 0.0) != (b < 0.0)) {
                    const double f = a / (a - b);
                    pts.emplace_back(x0 + f * (x1 - x0), y0 + f * (y1 - y0));
                }
            };
            const double x0 = px(i), x1 = px(i + 1), y1 = py(j) + ch, y0 = py(j + 1) + ch;
            edge(v00, v10, x0, y1, x1, y1);
            edge(v01, v11, x0, y0, x1, y0);
            edge(v00, v01, x0, y1, x0, y0);
            edge(v10, v11, x1, y1, x1, y0);
            if (pts.size() == 2)
                sv << "<line x1='" << pts[0].first << "' y1='" << pts[0].second << "' x2='"
                   << pts[1].first << "' y2='" << pts[1].second << "'/>\n";
        }
    sv << "</g>\n";

    sv << "<rect x='" << m << "' y='" << m << "' width='" << S - 2 * m << "' height='"
       << S - 2 * m << "' fill='none' stroke='black'/>\n"
       << "<text x='" << S / 2 << "' y='" << S - 20
       << "' text-anchor='middle' font-size='13' font-family='sans-serif'>x</text>\n"
       << "<text x='20' y='" << S / 2
       << "' text-anchor='middle' font-size='13' font-family='sans-serif' transform='rotate(-90 20 "
       << S / 2 << ")'>p</text>\n</svg>\n";

    std::ofstream out = detail::open_out(path);
    out << sv.str();
}

} // namespace trwf
