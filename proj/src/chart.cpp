#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "recrobust/common.hpp"
#include "recrobust/harness.hpp"

namespace recrobust {

namespace {

// Fixed-precision coordinates keep the file byte-stable across runs.
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

const char* fill_for(const std::string& metric, std::size_t index) {
    static const char* palette[] = {"#4878a8", "#e1812c", "#3a923a", "#c03d3e",
                                    "#9372b2", "#846c5b"};
    (void)metric;
    return palette[index % 6];
}

}  // namespace

std::string render_chart_svg(const EvalReport& report) {
    struct Bar {
        std::string label;
        std::string metric;
        double pct;
    };
    std::vector<Bar> bars;
    std::vector<std::string> metric_order;
    for (const auto& e : report.entries) {
        if (!e.pct_change) continue;
        bars.push_back(Bar{e.model + " " + e.metric, e.metric, *e.pct_change});
        if (std::find(metric_order.begin(), metric_order.end(), e.metric) ==
            metric_order.end())
            metric_order.push_back(e.metric);
    }
    if (bars.empty())
        throw ConfigError("chart: the report has no percent-change entries");

    const double bar_width = 56.0;
    const double gap = 28.0;
    const double margin_left = 64.0;
    const double margin_right = 24.0;
    const double plot_height = 260.0;
    const double margin_top = 36.0;
    const double label_space = 72.0;
    const double width =
        margin_left + bars.size() * (bar_width + gap) + margin_right;
    const double height = margin_top + plot_height + label_space;

    double max_abs = 0.0;
    for (const auto& b : bars) max_abs = std::max(max_abs, std::abs(b.pct));
    if (max_abs == 0.0) max_abs = 1.0;  // all-zero changes still get a frame
    const double scale = (plot_height / 2.0 - 10.0) / max_abs;
    const double zero_y = margin_top + plot_height / 2.0;

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
        << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << " "
        << num(height) << "\">\n";
    svg << "  <title>percent change vs baseline</title>\n";
    svg << "  <rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" fill=\"#ffffff\"/>\n";

    // axis label and zero line
    svg << "  <text x=\"12\" y=\"" << num(margin_top - 16.0)
        << "\" font-family=\"sans-serif\" font-size=\"13\">percent change (%)</text>\n";
    svg << "  <line class=\"zero-line\" x1=\"" << num(margin_left - 8.0) << "\" y1=\""
        << num(zero_y) << "\" x2=\"" << num(width - margin_right) << "\" y2=\"" << num(zero_y)
        << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    for (std::size_t b = 0; b < bars.size(); ++b) {
        const double x = margin_left + b * (bar_width + gap);
        const double h = std::abs(bars[b].pct) * scale;
        const double y = bars[b].pct >= 0.0 ? zero_y - h : zero_y;
        const std::size_t metric_idx = static_cast<std::size_t>(
            std::find(metric_order.begin(), metric_order.end(), bars[b].metric) -
            metric_order.begin());
        svg << "  <rect class=\"bar\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
            << num(bar_width) << "\" height=\"" << num(h) << "\" fill=\""
            << fill_for(bars[b].metric, metric_idx) << "\"/>\n";
        const double value_y = bars[b].pct >= 0.0 ? y - 6.0 : y + h + 14.0;
        char value[64];
        std::snprintf(value, sizeof(value), "%+.2f%%", bars[b].pct);
        svg << "  <text class=\"bar-value\" x=\"" << num(x + bar_width / 2.0) << "\" y=\""
            << num(value_y)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << value << "</text>\n";
        svg << "  <text class=\"bar-label\" x=\"" << num(x + bar_width / 2.0) << "\" y=\""
            << num(margin_top + plot_height + 16.0)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "transform=\"rotate(30 "
            << num(x + bar_width / 2.0) << " " << num(margin_top + plot_height + 16.0) << ")\">"
            << escape_xml(bars[b].label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void emit_chart(const EvalReport& report, const std::filesystem::path& path) {
    const std::string svg = render_chart_svg(report);
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write chart '" + path.string() + "'");
    out << svg;
}

}  // namespace recrobust
