#include "diffudec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace diffudec {

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 72.0, kRight = 180.0, kTop = 48.0, kBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    double scale(double v, double px_lo, double px_hi) const {
        double t = (hi == lo) ? 0.5 : (v - lo) / (hi - lo);
        return px_lo + t * (px_hi - px_lo);
    }
};

Range fit(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
    if (lo == hi) {
        double pad = (lo == 0.0) ? 1.0 : std::abs(lo) * 0.1;
        return {lo - pad, hi + pad};
    }
    double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

std::vector<double> ticks(const Range& r, int n = 5) {
    std::vector<double> out;
    double span = r.hi - r.lo;
    if (span <= 0.0) return {r.lo};
    double raw = span / n;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    }
    double first = std::ceil(r.lo / step) * step;
    for (double t = first; t <= r.hi + step * 1e-9; t += step) {
        out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    }
    return out;
}

}  // namespace

std::string render_svg(const SvgChart& chart) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : chart.series) {
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    Range rx = fit(xmin, xmax), ry = fit(ymin, ymax);
    double px_lo = kLeft, px_hi = kWidth - kRight;
    double py_lo = kHeight - kBottom, py_hi = kTop;  // y axis points up

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << (px_lo + px_hi) / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape(chart.title) << "</text>\n";

    // axes and grid
    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double t : ticks(rx)) {
        double x = rx.scale(t, px_lo, px_hi);
        svg << "<line x1=\"" << num(x) << "\" y1=\"" << py_lo << "\" x2=\"" << num(x) << "\" y2=\""
            << py_hi << "\" stroke=\"#e5e5e5\"/>\n";
        svg << "<text x=\"" << num(x) << "\" y=\"" << py_lo + 18
            << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
    }
    for (double t : ticks(ry)) {
        double y = ry.scale(t, py_lo, py_hi);
        svg << "<line x1=\"" << px_lo << "\" y1=\"" << num(y) << "\" x2=\"" << px_hi << "\" y2=\""
            << num(y) << "\" stroke=\"#e5e5e5\"/>\n";
        svg << "<text x=\"" << px_lo - 8 << "\" y=\"" << num(y + 4)
            << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
    }
    svg << "</g>\n";
    svg << "<line x1=\"" << px_lo << "\" y1=\"" << py_lo << "\" x2=\"" << px_hi << "\" y2=\""
        << py_lo << "\" stroke=\"#333\"/>\n";
    svg << "<line x1=\"" << px_lo << "\" y1=\"" << py_lo << "\" x2=\"" << px_lo << "\" y2=\""
        << py_hi << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << (px_lo + px_hi) / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(chart.x_label) << "</text>\n";
    svg << "<text x=\"20\" y=\"" << (py_lo + py_hi) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 20 " << (py_lo + py_hi) / 2 << ")\">" << escape(chart.y_label)
        << "</text>\n";

    // series
    for (std::size_t i = 0; i < chart.series.size(); ++i) {
        const auto& s = chart.series[i];
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (!s.scatter && s.points.size() > 1) {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
            if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
            svg << " points=\"";
            for (const auto& [x, y] : s.points) {
                svg << num(rx.scale(x, px_lo, px_hi)) << "," << num(ry.scale(y, py_lo, py_hi))
                    << " ";
            }
            svg << "\"/>\n";
        }
        for (const auto& [x, y] : s.points) {
            svg << "<circle cx=\"" << num(rx.scale(x, px_lo, px_hi)) << "\" cy=\""
                << num(ry.scale(y, py_lo, py_hi)) << "\" r=\"" << (s.scatter ? 3.5 : 2.5)
                << "\" fill=\"" << color << "\"/>\n";
        }
        double ly = kTop + 18.0 * static_cast<double>(i);
        svg << "<line x1=\"" << px_hi + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << px_hi + 34
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
        if (s.dashed) svg << " stroke-dasharray=\"6 4\"";
        svg << "/>\n";
        svg << "<text x=\"" << px_hi + 40 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace diffudec
