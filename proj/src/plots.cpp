// SPDX-License-Identifier: Apache-2.0
#include "scomcp/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scomcp/errors.hpp"

namespace scomcp::plots {

namespace {

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    std::ostringstream ss;
    if (std::abs(v) >= 1000.0 || (std::abs(v) < 0.01 && v != 0.0))
        ss.precision(1), ss << std::scientific << v;
    else
        ss.precision(3), ss << v;
    return ss.str();
}

}  // namespace

void line_chart_svg(const std::string& path, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel, const std::vector<Series>& series, bool log_y) {
    const int W = 720, H = 480;
    const int ml = 80, mr = 170, mt = 50, mb = 60;
    const double pw = W - ml - mr, ph = H - mt - mb;

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series) {
        for (double v : s.x) {
            x0 = std::min(x0, v);
            x1 = std::max(x1, v);
        }
        for (double v : s.y) {
            const double t = log_y ? std::log10(std::max(v, 1e-12)) : v;
            y0 = std::min(y0, t);
            y1 = std::max(y1, t);
        }
    }
    if (x1 <= x0) x1 = x0 + 1.0;
    if (y1 <= y0) y1 = y0 + 1.0;
    const double ypad = 0.05 * (y1 - y0);
    y0 -= ypad;
    y1 += ypad;

    auto px = [&](double x) { return ml + pw * (x - x0) / (x1 - x0); };
    auto py = [&](double y) {
        const double t = log_y ? std::log10(std::max(y, 1e-12)) : y;
        return mt + ph * (1.0 - (t - y0) / (y1 - y0));
    };

    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << W / 2 << "' y='25' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

    // frame
    f << "<rect x='" << ml << "' y='" << mt << "' width='" << pw << "' height='" << ph
      << "' fill='none' stroke='black'/>\n";

    // ticks
    const int nt = 5;
    for (int i = 0; i <= nt; ++i) {
        const double tx = x0 + (x1 - x0) * i / nt;
        f << "<line x1='" << px(tx) << "' y1='" << mt + ph << "' x2='" << px(tx) << "' y2='"
          << mt + ph + 5 << "' stroke='black'/>\n";
        f << "<text x='" << px(tx) << "' y='" << mt + ph + 20 << "' text-anchor='middle' font-size='11'>"
          << fmt(tx) << "</text>\n";
        const double tyv = y0 + (y1 - y0) * i / nt;
        const double ty = mt + ph * (1.0 - static_cast<double>(i) / nt);
        f << "<line x1='" << ml - 5 << "' y1='" << ty << "' x2='" << ml << "' y2='" << ty
          << "' stroke='black'/>\n";
        f << "<text x='" << ml - 8 << "' y='" << ty + 4 << "' text-anchor='end' font-size='11'>"
          << fmt(log_y ? std::pow(10.0, tyv) : tyv) << "</text>\n";
        f << "<line x1='" << ml << "' y1='" << ty << "' x2='" << ml + pw << "' y2='" << ty
          << "' stroke='#dddddd'/>\n";
    }
    f << "<text x='" << ml + pw / 2 << "' y='" << H - 15 << "' text-anchor='middle' font-size='13'>"
      << xlabel << "</text>\n";
    f << "<text x='20' y='" << mt + ph / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 20 "
      << mt + ph / 2 << ")'>" << ylabel << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kColors[si % 8];
        f << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
        for (size_t i = 0; i < s.x.size(); ++i) f << px(s.x[i]) << "," << py(s.y[i]) << " ";
        f << "'/>\n";
        for (size_t i = 0; i < s.x.size(); ++i)
            f << "<circle cx='" << px(s.x[i]) << "' cy='" << py(s.y[i]) << "' r='3' fill='" << color
              << "'/>\n";
        const double ly = mt + 18.0 * si + 10;
        f << "<line x1='" << ml + pw + 10 << "' y1='" << ly << "' x2='" << ml + pw + 30 << "' y2='" << ly
          << "' stroke='" << color << "' stroke-width='2'/>\n";
        f << "<text x='" << ml + pw + 35 << "' y='" << ly + 4 << "' font-size='11'>" << s.label
          << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace scomcp::plots
