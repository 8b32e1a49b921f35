#include "flexpos/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "flexpos/errors.hpp"

namespace flexpos::svg {

namespace {

constexpr std::size_t kMaxPoints = 4000;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

// Tick spacing from {1, 2, 5} x 10^k giving roughly `target` intervals.
double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo <= 0.0) {
            const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.05;
            lo -= pad;
            hi += pad;
        }
    }
};

void render_panel(std::string& out, const Panel& p, double x0, double y0, double w, double h) {
    const double left = 78, right = 150, top = 28, bottom = 42;
    const double pw = w - left - right, ph = h - top - bottom;
    Range rx, ry;
    for (const auto& s : p.series) {
        for (double v : s.x) rx.add(p.log_x ? (v > 0 ? std::log10(v) : NAN) : v);
        for (double v : s.y) ry.add(v);
    }
    rx.settle();
    ry.settle();
    const double ymid = 0.5 * (ry.lo + ry.hi), yspan = (ry.hi - ry.lo) * 1.05;
    ry.lo = ymid - 0.5 * yspan;
    ry.hi = ymid + 0.5 * yspan;
    if (p.equal_aspect) {
        // Same units per pixel on both axes.
        const double scale = std::max((rx.hi - rx.lo) / pw, (ry.hi - ry.lo) / ph);
        const double cx = 0.5 * (rx.lo + rx.hi), cy = 0.5 * (ry.lo + ry.hi);
        rx.lo = cx - 0.5 * scale * pw;
        rx.hi = cx + 0.5 * scale * pw;
        ry.lo = cy - 0.5 * scale * ph;
        ry.hi = cy + 0.5 * scale * ph;
    }
    auto px = [&](double v) { return x0 + left + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto py = [&](double v) { return y0 + top + (ry.hi - v) / (ry.hi - ry.lo) * ph; };

    out += "<rect x=\"" + num(x0 + left) + "\" y=\"" + num(y0 + top) + "\" width=\"" + num(pw) + "\" height=\"" +
           num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    out += "<text x=\"" + num(x0 + left + pw / 2) + "\" y=\"" + num(y0 + 18) +
           "\" text-anchor=\"middle\" font-size=\"14\">" + escape(p.title) + "</text>\n";
    out += "<text x=\"" + num(x0 + left + pw / 2) + "\" y=\"" + num(y0 + h - 6) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + escape(p.x_label) + "</text>\n";
    out += "<text transform=\"translate(" + num(x0 + 16) + "," + num(y0 + top + ph / 2) +
           ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" + escape(p.y_label) + "</text>\n";

    const double xs = nice_step(rx.hi - rx.lo, 6);
    for (double v = std::ceil(rx.lo / xs) * xs; v <= rx.hi + 1e-9 * xs; v += xs) {
        const double X = px(v);
        out += "<line x1=\"" + num(X) + "\" y1=\"" + num(y0 + top) + "\" x2=\"" + num(X) + "\" y2=\"" +
               num(y0 + top + ph) + "\" stroke=\"#ddd\"/>\n";
        const std::string label = p.log_x ? tick_label(std::pow(10.0, v)) : tick_label(v);
        out += "<text x=\"" + num(X) + "\" y=\"" + num(y0 + top + ph + 14) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + label + "</text>\n";
    }
    const double ys = nice_step(ry.hi - ry.lo, 5);
    for (double v = std::ceil(ry.lo / ys) * ys; v <= ry.hi + 1e-9 * ys; v += ys) {
        const double Y = py(v);
        out += "<line x1=\"" + num(x0 + left) + "\" y1=\"" + num(Y) + "\" x2=\"" + num(x0 + left + pw) + "\" y2=\"" +
               num(Y) + "\" stroke=\"#ddd\"/>\n";
        out += "<text x=\"" + num(x0 + left - 4) + "\" y=\"" + num(Y + 3) +
               "\" text-anchor=\"end\" font-size=\"10\">" + tick_label(v) + "</text>\n";
    }

    double ly = y0 + top + 10;
    for (const auto& s : p.series) {
        const std::size_t n = std::min(s.x.size(), s.y.size());
        std::string pts;
        for (std::size_t i : decimate(n, kMaxPoints)) {
            const double xv = p.log_x ? (s.x[i] > 0 ? std::log10(s.x[i]) : NAN) : s.x[i];
            if (!std::isfinite(xv) || !std::isfinite(s.y[i])) continue;
            pts += num(px(xv)) + "," + num(py(s.y[i])) + " ";
        }
        out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" + num(s.width) +
               "\" points=\"" + pts + "\"/>\n";
        if (s.label.empty()) continue;
        const double lx = x0 + left + pw + 10;
        out += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 18) + "\" y2=\"" + num(ly) +
               "\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(lx + 22) + "\" y=\"" + num(ly + 4) + "\" font-size=\"11\">" + escape(s.label) +
               "</text>\n";
        ly += 16;
    }
}

}  // namespace

std::vector<std::size_t> decimate(std::size_t n, std::size_t max_points) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / std::max<std::size_t>(1, max_points));
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

std::string render(const std::vector<Panel>& panels, double width, double panel_height) {
    const double height = panel_height * static_cast<double>(std::max<std::size_t>(1, panels.size()));
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) {
        render_panel(out, panels[i], 0.0, panel_height * static_cast<double>(i), width, panel_height);
    }
    out += "</svg>\n";
    return out;
}

void write(const std::vector<Panel>& panels, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << render(panels);
    f.close();
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace flexpos::svg
