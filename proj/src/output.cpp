#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "masim/harness.hpp"

namespace masim::harness {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << content;
    if (!out) throw InputError("write failed: " + path);
}

}  // namespace

std::string csv_string(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw InputError("no rows to emit");
    std::ostringstream out;
    out << "snr_db,algorithm,M,N,Na,d,T,K,trials,udsr,gudsr,ser,"
           "gudsr_bound,ser_pred,ser_g0,udsr_se,gudsr_se,ser_se\n";
    for (const MetricsRow& r : rows) {
        out << fmt(r.snr_db) << ',' << r.algorithm << ',' << r.m << ',' << r.n << ','
            << r.na << ',' << r.d << ',' << r.t << ',' << r.k << ',' << r.trials << ','
            << fmt(r.udsr) << ',' << fmt(r.gudsr) << ',' << fmt(r.ser) << ','
            << fmt(r.gudsr_bound) << ',' << fmt(r.ser_pred) << ',' << fmt(r.ser_g0) << ','
            << fmt(r.udsr_se) << ',' << fmt(r.gudsr_se) << ',' << fmt(r.ser_se) << '\n';
    }
    return out.str();
}

void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    write_file(path, csv_string(rows));
}

void emit_blocks_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    if (rows.empty()) throw InputError("no rows to emit");
    std::ostringstream out;
    out << "snr_db,algorithm,iteration,mean_blocks\n";
    for (const MetricsRow& r : rows)
        for (size_t i = 0; i < r.mean_blocks_per_iteration.size(); ++i)
            out << fmt(r.snr_db) << ',' << r.algorithm << ',' << (i + 1) << ','
                << fmt(r.mean_blocks_per_iteration[i]) << '\n';
    write_file(path, out.str());
}

namespace {

constexpr double kSerFloor = 1e-6;

struct Series {
    std::string label;
    std::vector<double> snr, value;
    std::vector<bool> floored;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Panel {
    double x0, y0, w, h;           // plot box in svg coordinates
    double xmin, xmax, ymin, ymax;  // data ranges (y in plot units)
    bool log_y;

    double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
    double py(double y) const {
        const double v = log_y ? std::log10(y) : y;
        const double lo = log_y ? std::log10(ymin) : ymin;
        const double hi = log_y ? std::log10(ymax) : ymax;
        return y0 + h - (v - lo) / (hi - lo) * h;
    }
};

void draw_axes(std::ostringstream& svg, const Panel& p, const std::string& title,
               const std::string& ylabel) {
    svg << "<rect x='" << p.x0 << "' y='" << p.y0 << "' width='" << p.w
        << "' height='" << p.h << "' fill='none' stroke='black'/>\n";
    svg << "<text x='" << p.x0 + p.w / 2 << "' y='" << p.y0 - 8
        << "' text-anchor='middle' font-size='13'>" << title << "</text>\n";
    svg << "<text x='" << p.x0 + p.w / 2 << "' y='" << p.y0 + p.h + 32
        << "' text-anchor='middle' font-size='11'>Es/N0 (dB)</text>\n";
    svg << "<text x='" << p.x0 - 42 << "' y='" << p.y0 + p.h / 2
        << "' text-anchor='middle' font-size='11' transform='rotate(-90 "
        << p.x0 - 42 << ' ' << p.y0 + p.h / 2 << ")'>" << ylabel << "</text>\n";
    // x ticks on integers
    for (double x = std::ceil(p.xmin); x <= p.xmax + 1e-9; x += 1.0) {
        svg << "<line x1='" << p.px(x) << "' y1='" << p.y0 + p.h << "' x2='" << p.px(x)
            << "' y2='" << p.y0 + p.h + 4 << "' stroke='black'/>\n";
        svg << "<text x='" << p.px(x) << "' y='" << p.y0 + p.h + 16
            << "' text-anchor='middle' font-size='10'>" << x << "</text>\n";
    }
    if (p.log_y) {
        for (double e = std::log10(p.ymin); e <= std::log10(p.ymax) + 1e-9; e += 1.0) {
            const double y = std::pow(10.0, e);
            svg << "<line x1='" << p.x0 - 4 << "' y1='" << p.py(y) << "' x2='" << p.x0
                << "' y2='" << p.py(y) << "' stroke='black'/>\n";
            svg << "<text x='" << p.x0 - 6 << "' y='" << p.py(y) + 3
                << "' text-anchor='end' font-size='10'>1e" << int(e) << "</text>\n";
        }
    } else {
        for (double y = 0.0; y <= 1.0 + 1e-9; y += 0.2) {
            svg << "<line x1='" << p.x0 - 4 << "' y1='" << p.py(y) << "' x2='" << p.x0
                << "' y2='" << p.py(y) << "' stroke='black'/>\n";
            char buf[16];
            std::snprintf(buf, sizeof buf, "%.1f", y);
            svg << "<text x='" << p.x0 - 6 << "' y='" << p.py(y) + 3
                << "' text-anchor='end' font-size='10'>" << buf << "</text>\n";
        }
    }
}

void draw_series(std::ostringstream& svg, const Panel& p,
                 const std::vector<Series>& series) {
    int color = 0;
    for (const Series& s : series) {
        const char* c = kPalette[color % 8];
        std::ostringstream pts;
        for (size_t i = 0; i < s.snr.size(); ++i)
            pts << p.px(s.snr[i]) << ',' << p.py(s.value[i]) << ' ';
        svg << "<polyline points='" << pts.str() << "' fill='none' stroke='" << c
            << "' stroke-width='1.5'/>\n";
        for (size_t i = 0; i < s.snr.size(); ++i) {
            if (s.floored[i]) {
                // open marker: the measured value was zero, clamped to the floor
                svg << "<circle cx='" << p.px(s.snr[i]) << "' cy='" << p.py(s.value[i])
                    << "' r='4' fill='white' stroke='" << c << "'/>\n";
                svg << "<text x='" << p.px(s.snr[i]) << "' y='" << p.py(s.value[i]) - 6
                    << "' text-anchor='middle' font-size='8' fill='" << c
                    << "'>0</text>\n";
            } else {
                svg << "<circle cx='" << p.px(s.snr[i]) << "' cy='" << p.py(s.value[i])
                    << "' r='2.5' fill='" << c << "'/>\n";
            }
        }
        ++color;
    }
}

}  // namespace

void emit_svg(const std::vector<MetricsRow>& rows, const std::string& path) {
    if (rows.empty()) throw InputError("no rows to emit");
    // One series per (algorithm, Na).
    std::map<std::string, Series> udsr_series, ser_series;
    double xmin = 1e300, xmax = -1e300;
    for (const MetricsRow& r : rows) {
        const std::string key = r.algorithm + " Na=" + std::to_string(r.na);
        xmin = std::min(xmin, r.snr_db);
        xmax = std::max(xmax, r.snr_db);
        Series& su = udsr_series[key];
        su.label = key;
        su.snr.push_back(r.snr_db);
        su.value.push_back(r.udsr);
        su.floored.push_back(false);
        Series& ss = ser_series[key];
        ss.label = key;
        ss.snr.push_back(r.snr_db);
        const bool floored = !(r.ser > 0.0);
        ss.value.push_back(floored ? kSerFloor : std::max(r.ser, kSerFloor));
        ss.floored.push_back(floored);
    }
    if (xmax <= xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='900' height='420' "
           "viewBox='0 0 900 420'>\n<rect width='900' height='420' fill='white'/>\n";
    Panel left{70, 40, 310, 300, xmin, xmax, 0.0, 1.0, false};
    Panel right{520, 40, 310, 300, xmin, xmax, kSerFloor, 1.0, true};
    draw_axes(svg, left, "User detection success rate", "UDSR");
    draw_axes(svg, right, "Symbol error rate", "SER");

    std::vector<Series> u, s;
    for (auto& kv : udsr_series) u.push_back(kv.second);
    for (auto& kv : ser_series) s.push_back(kv.second);
    draw_series(svg, left, u);
    draw_series(svg, right, s);

    // legend
    int i = 0;
    for (const Series& se : u) {
        const double ly = 360 + 14 * (i / 3);
        const double lx = 80 + 260 * (i % 3);
        svg << "<line x1='" << lx << "' y1='" << ly << "' x2='" << lx + 24 << "' y2='"
            << ly << "' stroke='" << kPalette[i % 8] << "' stroke-width='2'/>\n";
        svg << "<text x='" << lx + 30 << "' y='" << ly + 4 << "' font-size='11'>"
            << se.label << "</text>\n";
        ++i;
    }
    svg << "</svg>\n";
    write_file(path, svg.str());
}

}  // namespace masim::harness
