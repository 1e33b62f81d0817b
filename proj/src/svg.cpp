#include "fxtda/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace fxtda::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

class Canvas {
public:
    Canvas(double width, double height) : width_(width), height_(height) {
        out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
             << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n"
             << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height)
             << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double w = 1.0,
              const std::string& dash = {}) {
        out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(w) << '"';
        if (!dash.empty()) out_ << " stroke-dasharray=\"" << dash << '"';
        out_ << "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill, const std::string& title = {}) {
        out_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
             << "\" fill=\"" << fill << '"';
        if (title.empty()) {
            out_ << "/>\n";
        } else {
            out_ << "><title>" << escape(title) << "</title></rect>\n";
        }
    }

    void circle(double x, double y, double r, const std::string& fill) {
        out_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
             << "\" fill-opacity=\"0.8\"/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
        out_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) out_ << ' ';
            out_ << num(pts[i].first) << ',' << num(pts[i].second);
        }
        out_ << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 12.0, const std::string& anchor = "middle",
              double rotate = 0.0) {
        out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\""
             << num(size) << "\" text-anchor=\"" << anchor << '"';
        if (rotate != 0.0) out_ << " transform=\"rotate(" << num(rotate) << ' ' << num(x) << ' ' << num(y) << ")\"";
        out_ << '>' << escape(s) << "</text>\n";
    }

    double width() const { return width_; }
    double height() const { return height_; }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    double width_;
    double height_;
    std::ostringstream out_;
};

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finalise() {
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

// Plot frame with axes, ticks and labels; maps data to pixels.
class Frame {
public:
    Frame(Canvas& canvas, Range x, Range y, const std::string& title, const std::string& x_label,
          const std::string& y_label)
        : canvas_(canvas), x_(x), y_(y) {
        left_ = kMargin;
        right_ = canvas.width() - kMargin / 2;
        top_ = kMargin / 1.5;
        bottom_ = canvas.height() - kMargin;
        canvas.text(canvas.width() / 2, 22, title, 15);
        canvas.line(left_, bottom_, right_, bottom_, "black");
        canvas.line(left_, top_, left_, bottom_, "black");
        for (int i = 0; i <= 4; ++i) {
            const double fx = x_.lo + (x_.hi - x_.lo) * i / 4.0;
            const double fy = y_.lo + (y_.hi - y_.lo) * i / 4.0;
            canvas.line(px(fx), bottom_, px(fx), bottom_ + 4, "black");
            canvas.text(px(fx), bottom_ + 17, tick(fx), 10);
            canvas.line(left_ - 4, py(fy), left_, py(fy), "black");
            canvas.text(left_ - 6, py(fy) + 3, tick(fy), 10, "end");
        }
        canvas.text((left_ + right_) / 2, canvas.height() - 15, x_label, 12);
        canvas.text(16, (top_ + bottom_) / 2, y_label, 12, "middle", -90);
    }

    double px(double x) const { return left_ + (x - x_.lo) / (x_.hi - x_.lo) * (right_ - left_); }
    double py(double y) const { return bottom_ - (y - y_.lo) / (y_.hi - y_.lo) * (bottom_ - top_); }
    double top() const { return top_; }
    double right() const { return right_; }

private:
    Canvas& canvas_;
    Range x_, y_;
    double left_, right_, top_, bottom_;
};

// Diverging blue-white-red scale on [-1, 1] after normalisation.
std::string colour(double t) {
    t = std::clamp(t, -1.0, 1.0);
    int r, g, b;
    if (t >= 0) {
        r = 255;
        g = static_cast<int>(255 * (1 - t));
        b = static_cast<int>(255 * (1 - t));
    } else {
        r = static_cast<int>(255 * (1 + t));
        g = static_cast<int>(255 * (1 + t));
        b = 255;
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string escape(const std::string& text) {
    std::string out;
    for (const char c : text) {
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

std::string heatmap(const std::vector<std::string>& labels, const Eigen::MatrixXd& values, const std::string& title) {
    const auto n = static_cast<double>(labels.size());
    const double cell = n > 0 ? std::min(36.0, 480.0 / n) : 36.0;
    Canvas c(kMargin * 2 + cell * n + 40, kMargin * 2 + cell * n);
    c.text(c.width() / 2, 22, title, 15);
    double scale = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (std::isfinite(values.data()[i])) scale = std::max(scale, std::abs(values.data()[i]));
    }
    if (scale == 0.0) scale = 1.0;
    const double x0 = kMargin + 10, y0 = kMargin;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        c.text(x0 - 4, y0 + cell * (static_cast<double>(i) + 0.65), labels[static_cast<std::size_t>(i)], 10, "end");
        c.text(x0 + cell * (static_cast<double>(i) + 0.5), y0 - 6, labels[static_cast<std::size_t>(i)], 10);
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            c.rect(x0 + cell * static_cast<double>(j), y0 + cell * static_cast<double>(i), cell, cell,
                   colour(values(i, j) / scale),
                   labels[static_cast<std::size_t>(i)] + "/" + labels[static_cast<std::size_t>(j)] + ": " + tick(values(i, j)));
        }
    }
    return c.finish();
}

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
    Canvas c(kWidth, kHeight);
    Range xr, yr;
    for (const auto& s : series) {
        for (const double v : s.x) xr.add(v);
        for (const double v : s.y) yr.add(v);
    }
    xr.finalise();
    yr.finalise();
    Frame f(c, xr, yr, title, x_label, y_label);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) pts.emplace_back(f.px(s.x[i]), f.py(s.y[i]));
        const std::string colour_k = kPalette[k % 10];
        if (!pts.empty()) c.polyline(pts, colour_k);
        c.text(f.right() - 4, f.top() + 14.0 * static_cast<double>(k + 1), s.name, 11, "end");
        c.line(f.right() - 4 - 8.0 * static_cast<double>(s.name.size()) - 26, f.top() + 14.0 * static_cast<double>(k + 1) - 4,
               f.right() - 4 - 8.0 * static_cast<double>(s.name.size()) - 6, f.top() + 14.0 * static_cast<double>(k + 1) - 4,
               colour_k, 2);
    }
    return c.finish();
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values, const std::string& title,
                      const std::string& y_label) {
    Canvas c(kWidth, kHeight);
    Range xr{0.0, static_cast<double>(std::max<std::size_t>(labels.size(), 1))};
    Range yr{0.0, 0.0};
    for (const double v : values) yr.add(v);
    yr.finalise();
    Frame f(c, xr, yr, title, "", y_label);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x0 = f.px(static_cast<double>(i) + 0.15), x1 = f.px(static_cast<double>(i) + 0.85);
        const double ytop = f.py(std::max(values[i], 0.0)), ybase = f.py(std::min(values[i], 0.0));
        c.rect(x0, ytop, x1 - x0, ybase - ytop, kPalette[0], labels[i] + ": " + tick(values[i]));
        c.text((x0 + x1) / 2, f.py(yr.lo) + 30, labels[i], 10);
    }
    return c.finish();
}

std::string scatter(const std::vector<LabelledPoint>& points, const std::string& title, const std::string& x_label,
                    const std::string& y_label) {
    Canvas c(kWidth, kHeight);
    Range xr, yr;
    for (const auto& p : points) {
        xr.add(p.x);
        yr.add(p.y);
    }
    xr.finalise();
    yr.finalise();
    const double padx = 0.08 * (xr.hi - xr.lo), pady = 0.08 * (yr.hi - yr.lo);
    xr.lo -= padx, xr.hi += padx, yr.lo -= pady, yr.hi += pady;
    Frame f(c, xr, yr, title, x_label, y_label);
    for (const auto& p : points) {
        c.circle(f.px(p.x), f.py(p.y), 4, kPalette[0]);
        if (!p.label.empty()) c.text(f.px(p.x) + 6, f.py(p.y) - 6, p.label, 10, "start");
    }
    return c.finish();
}

std::string persistence_diagram(const std::vector<PersistenceDiagram>& diagrams, const std::string& title) {
    Canvas c(kWidth, kHeight);
    double top = 0.0;
    for (const auto& d : diagrams) {
        top = std::max(top, d.eps_max);
        for (const auto& p : d.pairs) top = std::max(top, p.death);
    }
    if (top <= 0.0) top = 1.0;
    Range r{0.0, top * 1.05};
    Frame f(c, r, r, title, "birth", "death");
    c.line(f.px(0), f.py(0), f.px(r.hi), f.py(r.hi), "#888888", 1, "4 3");
    for (const auto& d : diagrams) {
        const std::string col = kPalette[static_cast<std::size_t>(d.dimension) % 10];
        for (const auto& p : d.pairs) c.circle(f.px(p.birth), f.py(p.death), 3, col);
        for (const double b : d.essential_births) c.circle(f.px(b), f.py(top), 4, col);
        c.text(f.right() - 4, f.top() + 14.0 * (d.dimension + 1), "H" + std::to_string(d.dimension), 11, "end");
    }
    return c.finish();
}

std::string barcode(const std::vector<PersistenceDiagram>& diagrams, const std::string& title) {
    std::size_t bars = 0;
    double top = 0.0;
    for (const auto& d : diagrams) {
        bars += d.pairs.size() + d.essential_births.size();
        top = std::max(top, d.eps_max);
        for (const auto& p : d.pairs) top = std::max(top, p.death);
    }
    if (top <= 0.0) top = 1.0;
    const double row = std::clamp(400.0 / std::max<std::size_t>(bars, 1), 1.0, 8.0);
    Canvas c(kWidth, kMargin * 2 + row * static_cast<double>(bars) + 20);
    c.text(c.width() / 2, 22, title, 15);
    const double x0 = kMargin, x1 = c.width() - kMargin / 2;
    auto px = [&](double v) { return x0 + v / top * (x1 - x0); };
    double y = kMargin;
    for (const auto& d : diagrams) {
        const std::string col = kPalette[static_cast<std::size_t>(d.dimension) % 10];
        PersistenceDiagram sorted = d;
        std::stable_sort(sorted.pairs.begin(), sorted.pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
            return a.birth != b.birth ? a.birth < b.birth : a.persistence() > b.persistence();
        });
        for (const auto& p : sorted.pairs) {
            c.line(px(p.birth), y, px(p.death), y, col, std::max(1.0, row * 0.7));
            y += row;
        }
        for (const double b : d.essential_births) {
            c.line(px(b), y, px(top), y, col, std::max(1.0, row * 0.7), "6 2");
            y += row;
        }
    }
    c.line(x0, y + 4, x1, y + 4, "black");
    for (int i = 0; i <= 4; ++i) c.text(px(top * i / 4.0), y + 18, tick(top * i / 4.0), 10);
    return c.finish();
}

std::string dendrogram(const Dendrogram& dendrogram, const std::vector<std::string>& labels, const std::string& title) {
    const int n = dendrogram.leaves;
    Canvas c(kWidth, kHeight);
    double top = 0.0;
    for (const auto& m : dendrogram.merges) top = std::max(top, m.height);
    if (top <= 0.0) top = 1.0;
    Range xr{0.0, static_cast<double>(std::max(n, 1))};
    Range yr{0.0, top * 1.05};
    Frame f(c, xr, yr, title, "", "linkage distance");

    // Leaf order from a depth-first walk so that branches never cross.
    std::vector<double> x(static_cast<std::size_t>(2 * std::max(n, 1)), 0.0), h(x.size(), 0.0);
    std::vector<int> order;
    std::vector<std::pair<int, int>> children(x.size(), {-1, -1});
    for (std::size_t s = 0; s < dendrogram.merges.size(); ++s) {
        children[static_cast<std::size_t>(n) + s] = {dendrogram.merges[s].node_a, dendrogram.merges[s].node_b};
        h[static_cast<std::size_t>(n) + s] = dendrogram.merges[s].height;
    }
    std::vector<int> stack;
    const int root = n + static_cast<int>(dendrogram.merges.size()) - 1;
    if (n > 0) stack.push_back(root);
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        if (node < n) {
            order.push_back(node);
        } else {
            const auto [a, b] = children[static_cast<std::size_t>(node)];
            stack.push_back(b);
            stack.push_back(a);
        }
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int leaf = order[i];
        x[static_cast<std::size_t>(leaf)] = static_cast<double>(i) + 0.5;
        const std::string name = static_cast<std::size_t>(leaf) < labels.size() ? labels[static_cast<std::size_t>(leaf)]
                                                                                : std::to_string(leaf);
        c.text(f.px(x[static_cast<std::size_t>(leaf)]), f.py(0) + 30, name, 10);
    }
    for (std::size_t s = 0; s < dendrogram.merges.size(); ++s) {
        const auto& m = dendrogram.merges[s];
        const auto node = static_cast<std::size_t>(n) + s;
        const auto a = static_cast<std::size_t>(m.node_a), b = static_cast<std::size_t>(m.node_b);
        x[node] = 0.5 * (x[a] + x[b]);
        c.line(f.px(x[a]), f.py(h[a]), f.px(x[a]), f.py(m.height), kPalette[0], 1.5);
        c.line(f.px(x[b]), f.py(h[b]), f.px(x[b]), f.py(m.height), kPalette[0], 1.5);
        c.line(f.px(x[a]), f.py(m.height), f.px(x[b]), f.py(m.height), kPalette[0], 1.5);
    }
    return c.finish();
}

}  // namespace fxtda::svg
