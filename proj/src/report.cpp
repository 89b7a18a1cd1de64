#include "gpv/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "gpv/error.hpp"

namespace gpv::report {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string header(double w, double h) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n";
}

std::string text(double x, double y, std::string_view s, std::string_view extra = {}) {
    std::string out = "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\"";
    if (extra.find("font-size") == std::string_view::npos) out += " font-size=\"11\"";
    if (!extra.empty()) {
        out += ' ';
        out += extra;
    }
    return out + ">" + xml_escape(s) + "</text>\n";
}

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default:
                // Control characters other than tab/newline are not allowed in XML 1.0.
                if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') out += ' ';
                else out += c;
        }
    }
    return out;
}

std::string diverging_color(std::optional<double> v) {
    if (!v) return "#cccccc";
    const double t = std::clamp(*v, -1.0, 1.0);
    int r, g, b;
    if (t >= 0) {  // white -> red
        r = 255;
        g = static_cast<int>(std::lround(255 * (1 - t)));
        b = g;
    } else {  // white -> blue
        b = 255;
        r = static_cast<int>(std::lround(255 * (1 + t)));
        g = r;
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string heatmap_svg(const analysis::Matrix& m, std::string_view title) {
    const double cell = 36, left = 150, top = 60;
    const std::size_t n = m.size();
    const double w = left + cell * static_cast<double>(n) + 20;
    const double h = top + cell * static_cast<double>(n) + 160;
    std::string out = header(w, h);
    out += text(10, 24, title, "font-size=\"14\" font-weight=\"bold\"");
    const bool distance = m.kind == analysis::MatrixKind::distance;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = top + cell * static_cast<double>(i);
        out += text(left - 6, y + cell / 2 + 4, m.labels[i], "text-anchor=\"end\"");
        for (std::size_t j = 0; j < n; ++j) {
            const double x = left + cell * static_cast<double>(j);
            auto v = m.cells[i][j];
            std::optional<double> shade = v;
            if (v && distance) shade = 1.0 - *v;  // distance 0 (similar) is red, 2 is blue
            out += "<rect class=\"cell\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) +
                   "\" height=\"" + num(cell) + "\" fill=\"" + diverging_color(shade) + "\" stroke=\"#ffffff\"><title>" +
                   xml_escape(m.labels[i] + " / " + m.labels[j] + ": " + (v ? num(*v) : std::string("n/a"))) +
                   "</title></rect>\n";
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double x = left + cell * static_cast<double>(j) + cell / 2;
        const double y = top + cell * static_cast<double>(n) + 8;
        out += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"11\" transform=\"rotate(60 " + num(x) + " " +
               num(y) + ")\">" + xml_escape(m.labels[j]) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string scatter_svg(const analysis::Embedding& e, std::string_view title) {
    const double size = 480, pad = 60;
    double span = 1e-12;
    for (const auto& c : e.coords) {
        for (std::size_t k = 0; k < std::min<std::size_t>(2, c.size()); ++k) span = std::max(span, std::abs(c[k]));
    }
    auto px = [&](double v) { return pad + (v / span + 1) / 2 * (size - 2 * pad); };
    auto py = [&](double v) { return size - px(v); };
    std::string out = header(size, size);
    out += text(10, 24, title, "font-size=\"14\" font-weight=\"bold\"");
    out += "<line x1=\"" + num(pad) + "\" y1=\"" + num(size / 2) + "\" x2=\"" + num(size - pad) + "\" y2=\"" + num(size / 2) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<line x1=\"" + num(size / 2) + "\" y1=\"" + num(pad) + "\" x2=\"" + num(size / 2) + "\" y2=\"" + num(size - pad) +
           "\" stroke=\"#dddddd\"/>\n";
    for (std::size_t i = 0; i < e.labels.size(); ++i) {
        const double x = px(e.coords[i][0]);
        const double y = py(e.coords[i].size() > 1 ? e.coords[i][1] : 0.0);
        out += "<circle class=\"point\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"5\" fill=\"#1f77b4\"/>\n";
        out += text(x + 7, y - 7, e.labels[i]);
    }
    out += "</svg>\n";
    return out;
}

std::string radar_svg(std::span<const ValueVector> vectors, std::string_view title) {
    if (vectors.empty()) throw ValidationError("radar chart needs at least one vector");
    const auto labels = analysis::batch_labels(vectors);
    if (labels.empty()) throw ValidationError("radar chart needs at least one value");
    const double size = 560, cx = size / 2, cy = size / 2 + 10, radius = 180;
    const std::size_t n = labels.size();
    auto angle = [&](std::size_t k) { return -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n); };

    std::string out = header(size, size + 20 * static_cast<double>(vectors.size()));
    out += text(10, 24, title, "font-size=\"14\" font-weight=\"bold\"");
    for (std::size_t k = 0; k < n; ++k) {
        const double a = angle(k);
        out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(cy) + "\" x2=\"" + num(cx + radius * std::cos(a)) + "\" y2=\"" +
               num(cy + radius * std::sin(a)) + "\" stroke=\"#dddddd\"/>\n";
        out += text(cx + (radius + 14) * std::cos(a), cy + (radius + 14) * std::sin(a), labels[k], "text-anchor=\"middle\"");
    }
    for (std::size_t s = 0; s < vectors.size(); ++s) {
        const auto& v = vectors[s];
        auto r = v.range();
        double hi = r.hi;
        if (!r.bounded()) {  // dictionary rates: scale to the largest observed value
            hi = r.lo;
            for (const auto& e : v.entries()) {
                if (e.score) hi = std::max(hi, *e.score);
            }
        }
        const double extent = hi > r.lo ? hi - r.lo : 1.0;
        std::string points;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = std::clamp((v.get(labels[k]).value_or(r.lo) - r.lo) / extent, 0.0, 1.0);
            const double a = angle(k);
            if (!points.empty()) points += ' ';
            points += num(cx + radius * t * std::cos(a)) + "," + num(cy + radius * t * std::sin(a));
        }
        const char* color = kSeriesColors[s % std::size(kSeriesColors)];
        out += "<polygon class=\"series\" points=\"" + points + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"" +
               color + "\"><title>" + xml_escape(v.subject_id()) + "</title></polygon>\n";
        out += text(20, size + 20 * static_cast<double>(s), v.subject_id(), std::string("fill=\"") + color + "\"");
    }
    out += "</svg>\n";
    return out;
}

}  // namespace gpv::report
