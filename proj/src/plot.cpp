#include "stdlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace stdlab {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0, kMargin = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

struct Range {
    double lo = 0.0, hi = 1.0;

    void expand(double x) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    void pad() {
        if (hi <= lo) hi = lo + 1.0;
        const double p = 0.05 * (hi - lo);
        lo -= p;
        hi += p;
    }
    double to_px(double x, double px_lo, double px_hi) const {
        return px_lo + (x - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

std::vector<double> column_values(const CsvTable& t, const std::string& name) {
    const int c = t.column(name);
    if (c < 0) throw std::invalid_argument("plot: no column named '" + name + "'");
    std::vector<double> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) out.push_back(std::stod(row[static_cast<size_t>(c)]));
    return out;
}

std::string svg_header() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
           num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string axes(const Range& rx, const Range& ry, const std::string& xlab, const std::string& ylab) {
    std::string s;
    s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kHeight - kMargin) + "\" x2=\"" +
         num(kWidth - kMargin) + "\" y2=\"" + num(kHeight - kMargin) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin) + "\" x2=\"" + num(kMargin) +
         "\" y2=\"" + num(kHeight - kMargin) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kHeight - kMargin + 16) +
         "\" font-size=\"11\">" + num(rx.lo) + "</text>\n";
    s += "<text x=\"" + num(kWidth - kMargin) + "\" y=\"" + num(kHeight - kMargin + 16) +
         "\" font-size=\"11\" text-anchor=\"end\">" + num(rx.hi) + "</text>\n";
    s += "<text x=\"" + num(kMargin - 4) + "\" y=\"" + num(kHeight - kMargin) +
         "\" font-size=\"11\" text-anchor=\"end\">" + num(ry.lo) + "</text>\n";
    s += "<text x=\"" + num(kMargin - 4) + "\" y=\"" + num(kMargin + 4) +
         "\" font-size=\"11\" text-anchor=\"end\">" + num(ry.hi) + "</text>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + xlab + "</text>\n";
    s += "<text x=\"14\" y=\"" + num(kHeight / 2) + "\" font-size=\"12\" text-anchor=\"middle\" " +
         "transform=\"rotate(-90 14 " + num(kHeight / 2) + ")\">" + ylab + "</text>\n";
    return s;
}

}  // namespace

std::string render_scatter_svg(const CsvTable& table, const std::string& x_col,
                               const std::string& y_col, const std::string& color_col) {
    auto xs = column_values(table, x_col);
    auto ys = column_values(table, y_col);
    std::vector<int> groups(xs.size(), 0);
    if (!color_col.empty()) {
        auto cs = column_values(table, color_col);
        std::map<long long, int> ids;
        for (size_t i = 0; i < cs.size(); ++i) {
            long long key = static_cast<long long>(std::llround(cs[i]));
            auto [it, fresh] = ids.emplace(key, static_cast<int>(ids.size()));
            groups[i] = it->second;
        }
    }
    Range rx, ry;
    if (!xs.empty()) {
        rx = {xs[0], xs[0]};
        ry = {ys[0], ys[0]};
    }
    for (size_t i = 0; i < xs.size(); ++i) {
        rx.expand(xs[i]);
        ry.expand(ys[i]);
    }
    rx.pad();
    ry.pad();

    std::string s = svg_header();
    s += axes(rx, ry, x_col, y_col);
    for (size_t i = 0; i < xs.size(); ++i) {
        const double px = rx.to_px(xs[i], kMargin, kWidth - kMargin);
        const double py = ry.to_px(ys[i], kHeight - kMargin, kMargin);
        s += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"2\" fill=\"" +
             kPalette[static_cast<size_t>(groups[i]) % 8] + "\" fill-opacity=\"0.7\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string render_line_svg(const CsvTable& table, const std::string& x_col,
                            const std::vector<std::string>& y_cols) {
    if (y_cols.empty()) throw std::invalid_argument("plot: need at least one y column");
    auto xs = column_values(table, x_col);
    std::vector<std::vector<double>> series;
    for (const auto& yc : y_cols) series.push_back(column_values(table, yc));

    Range rx, ry;
    if (!xs.empty()) {
        rx = {xs[0], xs[0]};
        ry = {series[0][0], series[0][0]};
    }
    for (double x : xs) rx.expand(x);
    for (const auto& ys : series) {
        for (double y : ys) ry.expand(y);
    }
    rx.pad();
    ry.pad();

    std::string s = svg_header();
    s += axes(rx, ry, x_col, y_cols.size() == 1 ? y_cols[0] : "value");
    for (size_t k = 0; k < series.size(); ++k) {
        std::string pts;
        for (size_t i = 0; i < xs.size(); ++i) {
            if (i) pts += " ";
            pts += num(rx.to_px(xs[i], kMargin, kWidth - kMargin)) + "," +
                   num(ry.to_px(series[k][i], kHeight - kMargin, kMargin));
        }
        s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + kPalette[k % 8] +
             "\" stroke-width=\"1.5\"/>\n";
        s += "<text x=\"" + num(kWidth - kMargin + 4) + "\" y=\"" + num(kMargin + 14.0 * k) +
             "\" font-size=\"11\" fill=\"" + kPalette[k % 8] + "\">" + y_cols[k] + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace stdlab
