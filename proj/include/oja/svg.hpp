#pragma once

#include <oja/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace oja::svg {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct BarSeries {
    std::string name;
    std::vector<std::pair<double, double>> values; // (x, height >= 0)
};

struct FigureSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> lines;
    std::vector<BarSeries> bars; // rendered in a strip beneath the main panel
    int width = 720;
    int height = 440;
};

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick(double v) {
    char buf[40];
    // trim trailing zeros for axis labels, keep at most 3 decimals
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s.empty() ? "0" : s;
}

struct Mapper {
    double lo = 0, hi = 1;   // data range
    double a = 0, b = 1;     // pixel range
    double at(double v) const {
        if (hi == lo) return (a + b) / 2.0;
        return a + (v - lo) / (hi - lo) * (b - a);
    }
};

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#8c564b", "#e377c2"};
    return colors[i % 6];
}

} // namespace detail

/// Deterministic chart writer: fixed layout, fixed palette, two-decimal
/// coordinates, one polyline (plus point markers) per series, optional bar
/// strip under the main panel. Output is plain SVG 1.1 with no scripting.
inline std::string render_svg(const FigureSpec& spec) {
    bool any = false;
    for (const auto& s : spec.lines) any = any || !s.points.empty();
    for (const auto& s : spec.bars) any = any || !s.values.empty();
    if (!any) throw EmptySeriesError("figure has no data points");

    double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
    bool first = true;
    auto feed = [&](double x, double y) {
        if (first) {
            xlo = xhi = x;
            ylo = yhi = y;
            first = false;
        } else {
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    };
    for (const auto& s : spec.lines)
        for (const auto& [x, y] : s.points) feed(x, y);
    double bar_max = 0;
    for (const auto& s : spec.bars)
        for (const auto& [x, h] : s.values) {
            feed(x, ylo); // bars only widen the x range
            bar_max = std::max(bar_max, h);
        }
    if (ylo > 0 && !spec.lines.empty()) ylo = 0; // counts read better from zero

    const double W = spec.width, H = spec.height;
    const double ml = 56, mr = 16, mt = 34, mb = 42;
    const bool with_bars = !spec.bars.empty();
    const double strip_h = with_bars ? (H - mt - mb) * 0.25 : 0;
    const double strip_gap = with_bars ? 10 : 0;
    const double plot_bottom = H - mb - strip_h - strip_gap;

    detail::Mapper mx{xlo, xhi, ml, W - mr};
    detail::Mapper my{ylo, yhi, plot_bottom, mt}; // y grows upward
    detail::Mapper mbary{0, bar_max > 0 ? bar_max : 1, H - mb, H - mb - strip_h};

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
           "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
           std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + detail::num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" " +
           "font-family=\"sans-serif\" font-size=\"14\">" + xml_escape(spec.title) + "</text>\n";

    // axes
    out += "<line x1=\"" + detail::num(ml) + "\" y1=\"" + detail::num(plot_bottom) + "\" x2=\"" +
           detail::num(W - mr) + "\" y2=\"" + detail::num(plot_bottom) +
           "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + detail::num(ml) + "\" y1=\"" + detail::num(mt) + "\" x2=\"" +
           detail::num(ml) + "\" y2=\"" + detail::num(plot_bottom) +
           "\" stroke=\"#444\" stroke-width=\"1\"/>\n";

    // endpoint tick labels
    out += "<text x=\"" + detail::num(ml) + "\" y=\"" + detail::num(plot_bottom + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::tick(xlo) + "</text>\n";
    out += "<text x=\"" + detail::num(W - mr) + "\" y=\"" + detail::num(plot_bottom + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::tick(xhi) + "</text>\n";
    out += "<text x=\"" + detail::num(ml - 6) + "\" y=\"" + detail::num(plot_bottom + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::tick(ylo) + "</text>\n";
    out += "<text x=\"" + detail::num(ml - 6) + "\" y=\"" + detail::num(mt + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::tick(yhi) + "</text>\n";

    // axis titles
    out += "<text x=\"" + detail::num((ml + W - mr) / 2) + "\" y=\"" + detail::num(H - 8) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           xml_escape(spec.x_label) + "</text>\n";
    out += "<text x=\"14\" y=\"" + detail::num((mt + plot_bottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 " +
           detail::num((mt + plot_bottom) / 2) + ")\">" + xml_escape(spec.y_label) + "</text>\n";

    // bar strip
    if (with_bars) {
        double bar_w = 4.0;
        std::size_t total_bars = 0;
        for (const auto& s : spec.bars) total_bars += s.values.size();
        if (total_bars > 0)
            bar_w = std::clamp((W - ml - mr) / static_cast<double>(total_bars + 1) * 0.6, 1.0, 10.0);
        std::size_t bi = 0;
        for (const auto& s : spec.bars) {
            const std::string color = detail::palette(bi + spec.lines.size());
            for (const auto& [x, h] : s.values) {
                const double px = mx.at(x);
                const double top = mbary.at(h);
                out += "<rect x=\"" + detail::num(px - bar_w / 2) + "\" y=\"" + detail::num(top) +
                       "\" width=\"" + detail::num(bar_w) + "\" height=\"" +
                       detail::num((H - mb) - top) + "\" fill=\"" + color +
                       "\" fill-opacity=\"0.55\"/>\n";
            }
            ++bi;
        }
    }

    // line series with point markers
    std::size_t si = 0;
    for (const auto& s : spec.lines) {
        const std::string color = detail::palette(si);
        if (s.points.size() > 1) {
            std::string pts;
            for (const auto& [x, y] : s.points) {
                if (!pts.empty()) pts += " ";
                pts += detail::num(mx.at(x)) + "," + detail::num(my.at(y));
            }
            out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
                   "\" stroke-width=\"1.5\"/>\n";
        }
        for (const auto& [x, y] : s.points)
            out += "<circle cx=\"" + detail::num(mx.at(x)) + "\" cy=\"" + detail::num(my.at(y)) +
                   "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
        // legend entry
        const double ly = mt + 14 * static_cast<double>(si);
        out += "<rect x=\"" + detail::num(W - mr - 130) + "\" y=\"" + detail::num(ly) +
               "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
        out += "<text x=\"" + detail::num(W - mr - 116) + "\" y=\"" + detail::num(ly + 9) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(s.name) +
               "</text>\n";
        ++si;
    }

    out += "</svg>\n";
    return out;
}

} // namespace oja::svg
