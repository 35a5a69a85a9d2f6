#include "grasp/report/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace grasp::report {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double x) {
        if (!std::isfinite(x)) return;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    void settle() {
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

std::string header(double w, double h) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) +
           "\" height=\"" + fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const std::string& anchor = "middle", int size = 12) {
    return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
           std::to_string(size) + "\">" + xml_escape(s) + "</text>\n";
}

// Axes frame with five ticks per axis.
std::string axes(double x0, double y0, double w, double h, const Range& xr, const Range& yr) {
    std::string s = "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
                    "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + w * i / 4.0;
        const double fy = y0 + h - h * i / 4.0;
        s += "<line x1=\"" + fmt(fx) + "\" y1=\"" + fmt(y0 + h) + "\" x2=\"" + fmt(fx) + "\" y2=\"" + fmt(y0 + h + 4) +
             "\" stroke=\"black\"/>\n";
        s += text(fx, y0 + h + 16, tick(xr.lo + (xr.hi - xr.lo) * i / 4.0));
        s += "<line x1=\"" + fmt(x0 - 4) + "\" y1=\"" + fmt(fy) + "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(fy) +
             "\" stroke=\"black\"/>\n";
        s += text(x0 - 6, fy + 4, tick(yr.lo + (yr.hi - yr.lo) * i / 4.0), "end");
    }
    return s;
}

}  // namespace

const std::string& head_color(std::size_t k) {
    static const std::vector<std::string> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
    return palette[k % palette.size()];
}

std::string xml_escape(const std::string& s) {
    std::string out;
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

std::string curve_plot(const std::string& title, const std::string& x_label, const std::vector<Curve>& curves) {
    const double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    Range xr, yr;
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if (!std::isfinite(c.mean[i])) continue;
            xr.add(c.x[i]);
            const double e = std::isfinite(c.err[i]) ? c.err[i] : 0.0;
            yr.add(c.mean[i] - e);
            yr.add(c.mean[i] + e);
        }
    }
    xr.settle();
    yr.settle();
    auto px = [&](double x) { return L + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return T + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::string s = header(W, H);
    s += text(W / 2, 22, title, "middle", 14);
    s += axes(L, T, pw, ph, xr, yr);
    s += text(L + pw / 2, H - 10, x_label);
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const Curve& c = curves[ci];
        const std::string& color = head_color(ci);
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            if (std::isfinite(c.mean[i])) idx.push_back(i);
        }
        if (idx.empty()) continue;
        std::string band, line;
        for (std::size_t i : idx) {
            const double e = std::isfinite(c.err[i]) ? c.err[i] : 0.0;
            band += fmt(px(c.x[i])) + "," + fmt(py(c.mean[i] + e)) + " ";
            line += fmt(px(c.x[i])) + "," + fmt(py(c.mean[i])) + " ";
        }
        for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
            const double e = std::isfinite(c.err[*it]) ? c.err[*it] : 0.0;
            band += fmt(px(c.x[*it])) + "," + fmt(py(c.mean[*it] - e)) + " ";
        }
        s += "<polygon class=\"band\" points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        s += "<polyline class=\"mean\" points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        const double ly = T + 10 + 18 * static_cast<double>(ci);
        s += "<line x1=\"" + fmt(W - R + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(W - R + 32) + "\" y2=\"" +
             fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"3\"/>\n";
        s += text(W - R + 38, ly + 4, c.label, "start");
    }
    return s + "</svg>\n";
}

std::string histogram(const std::string& title, const std::vector<double>& values, std::size_t bins,
                      const std::string& color) {
    const double W = 480, H = 320, L = 60, R = 20, T = 40, B = 50;
    const double pw = W - L - R, ph = H - T - B;
    bins = std::max<std::size_t>(bins, 1);
    Range xr;
    for (double v : values) xr.add(v);
    xr.settle();
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        auto b = static_cast<std::size_t>((v - xr.lo) / (xr.hi - xr.lo) * static_cast<double>(bins));
        counts[std::min(b, bins - 1)] += 1;
    }
    Range yr;
    yr.lo = 0.0;
    yr.hi = static_cast<double>(std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end())));
    std::string s = header(W, H);
    s += text(W / 2, 22, title, "middle", 14);
    s += axes(L, T, pw, ph, xr, yr);
    const double bw = pw / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const double h = ph * static_cast<double>(counts[b]) / yr.hi;
        s += "<rect class=\"bin\" x=\"" + fmt(L + bw * static_cast<double>(b)) + "\" y=\"" + fmt(T + ph - h) +
             "\" width=\"" + fmt(bw) + "\" height=\"" + fmt(h) + "\" fill=\"" + color +
             "\" fill-opacity=\"0.7\" stroke=\"white\"/>\n";
    }
    if (xr.lo < 0.0 && xr.hi > 0.0) {
        const double zx = L + (0.0 - xr.lo) / (xr.hi - xr.lo) * pw;
        s += "<line x1=\"" + fmt(zx) + "\" y1=\"" + fmt(T) + "\" x2=\"" + fmt(zx) + "\" y2=\"" + fmt(T + ph) +
             "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
    }
    s += text(L + pw / 2, H - 10, "return difference");
    return s + "</svg>\n";
}

std::string trajectory_grid(const std::vector<Panel>& panels, std::size_t columns, double lo, double hi,
                            std::size_t heads) {
    const double cell = 220, pad = 30, legend = 28;
    columns = std::max<std::size_t>(columns, 1);
    const std::size_t rows = (panels.size() + columns - 1) / columns;
    const double W = pad + static_cast<double>(columns) * (cell + pad);
    const double H = legend + pad + static_cast<double>(rows) * (cell + pad);
    std::string s = header(W, H);
    for (std::size_t k = 0; k < heads; ++k) {
        const double x = pad + 90.0 * static_cast<double>(k);
        s += "<line x1=\"" + fmt(x) + "\" y1=\"16\" x2=\"" + fmt(x + 20) + "\" y2=\"16\" stroke=\"" + head_color(k) +
             "\" stroke-width=\"3\"/>\n";
        s += text(x + 26, 20, "head " + std::to_string(k), "start");
    }
    for (std::size_t i = 0; i < panels.size(); ++i) {
        const Panel& p = panels[i];
        const double x0 = pad + static_cast<double>(i % columns) * (cell + pad);
        const double y0 = legend + pad + static_cast<double>(i / columns) * (cell + pad);
        auto px = [&](double x) { return x0 + (x - lo) / (hi - lo) * cell; };
        auto py = [&](double y) { return y0 + cell - (y - lo) / (hi - lo) * cell; };
        s += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(cell) + "\" height=\"" + fmt(cell) +
             "\" fill=\"none\" stroke=\"#888\"/>\n";
        s += text(x0 + cell / 2, y0 - 6, p.title, "middle", 11);
        for (const auto& path : p.paths) {
            std::string pts;
            for (const auto& q : path.points) pts += fmt(px(q[0])) + "," + fmt(py(q[1])) + " ";
            s += "<polyline class=\"trajectory\" points=\"" + pts + "\" fill=\"none\" stroke=\"" +
                 head_color(path.head) + "\" stroke-width=\"2\" stroke-opacity=\"0.85\"/>\n";
            if (!path.points.empty()) {
                const auto& e = path.points.back();
                s += "<circle cx=\"" + fmt(px(e[0])) + "\" cy=\"" + fmt(py(e[1])) + "\" r=\"3\" fill=\"" +
                     head_color(path.head) + "\"/>\n";
            }
        }
        for (const auto& m : p.markers) {
            s += "<rect x=\"" + fmt(px(m.at[0]) - 5) + "\" y=\"" + fmt(py(m.at[1]) - 5) +
                 "\" width=\"10\" height=\"10\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
            s += text(px(m.at[0]) + 8, py(m.at[1]) - 6, m.label, "start", 11);
        }
        s += "<circle cx=\"" + fmt(px(p.start[0])) + "\" cy=\"" + fmt(py(p.start[1])) +
             "\" r=\"4\" fill=\"black\"/>\n";
    }
    return s + "</svg>\n";
}

}  // namespace grasp::report
