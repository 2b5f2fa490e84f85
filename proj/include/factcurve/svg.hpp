#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace factcurve::svg {

/// One line series over the five bucket midpoints (10%, 30%, ..., 90%).
/// Absent points are skipped, breaking the polyline.
struct Series {
    std::string label;
    std::string color;
    std::vector<std::optional<double>> values;
};

namespace detail {

inline std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace detail

/// Deterministic, dependency-free SVG line chart. Byte-identical output for
/// identical inputs.
[[nodiscard]] inline std::string line_chart(const std::string& title,
                                            const std::string& y_label,
                                            const std::vector<Series>& series, double y_max) {
    constexpr double width = 640, height = 400;
    constexpr double left = 60, right = 20, top = 40, bottom = 50;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    if (y_max <= 0) y_max = 1.0;

    auto x_of = [&](int bucket) { return left + plot_w * (10.0 + 20.0 * bucket) / 100.0; };
    auto y_of = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n";
    out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    out += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + title + "</text>\n";

    // axes
    out += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top) + "\" x2=\"" +
           detail::fixed(left) + "\" y2=\"" + detail::fixed(top + plot_h) +
           "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + detail::fixed(left) + "\" y1=\"" + detail::fixed(top + plot_h) +
           "\" x2=\"" + detail::fixed(left + plot_w) + "\" y2=\"" + detail::fixed(top + plot_h) +
           "\" stroke=\"black\"/>\n";

    // x ticks at bucket midpoints
    for (int b = 0; b < 5; ++b) {
        const double x = x_of(b);
        out += "<line x1=\"" + detail::fixed(x) + "\" y1=\"" + detail::fixed(top + plot_h) +
               "\" x2=\"" + detail::fixed(x) + "\" y2=\"" + detail::fixed(top + plot_h + 5) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + detail::fixed(x) + "\" y=\"" + detail::fixed(top + plot_h + 20) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
               std::to_string(10 + 20 * b) + "%</text>\n";
    }

    // y ticks: 0, 1/4, 1/2, 3/4, 1 of y_max
    for (int t = 0; t <= 4; ++t) {
        const double v = y_max * t / 4.0;
        const double y = y_of(v);
        out += "<line x1=\"" + detail::fixed(left - 5) + "\" y1=\"" + detail::fixed(y) +
               "\" x2=\"" + detail::fixed(left) + "\" y2=\"" + detail::fixed(y) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + detail::fixed(left - 8) + "\" y=\"" + detail::fixed(y + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
               detail::fixed(v) + "</text>\n";
    }
    out += "<text x=\"16\" y=\"" + detail::fixed(top + plot_h / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " + detail::fixed(top + plot_h / 2) + ")\">" + y_label +
           "</text>\n";
    out += "<text x=\"" + detail::fixed(left + plot_w / 2) + "\" y=\"" +
           detail::fixed(height - 10) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           "relative position</text>\n";

    // series
    double legend_y = top + 8;
    for (const auto& s : series) {
        std::string points;
        for (int b = 0; b < 5 && b < static_cast<int>(s.values.size()); ++b) {
            if (!s.values[b].has_value()) {
                if (!points.empty()) {
                    out += "<polyline fill=\"none\" stroke=\"" + s.color +
                           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
                    points.clear();
                }
                continue;
            }
            const double x = x_of(b), y = y_of(*s.values[b]);
            points += detail::fixed(x) + "," + detail::fixed(y) + " ";
            out += "<circle cx=\"" + detail::fixed(x) + "\" cy=\"" + detail::fixed(y) +
                   "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
        }
        if (!points.empty())
            out += "<polyline fill=\"none\" stroke=\"" + s.color +
                   "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";

        out += "<rect x=\"" + detail::fixed(left + plot_w - 150) + "\" y=\"" +
               detail::fixed(legend_y - 9) + "\" width=\"12\" height=\"12\" fill=\"" + s.color +
               "\"/>\n";
        out += "<text x=\"" + detail::fixed(left + plot_w - 132) + "\" y=\"" +
               detail::fixed(legend_y + 2) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + s.label + "</text>\n";
        legend_y += 18;
    }

    out += "</svg>\n";
    return out;
}

} // namespace factcurve::svg
