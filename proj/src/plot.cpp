/*
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "fenshses/bench.hpp"

namespace fenshses {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;

const char* color_for(SearchStrategy s) {
    switch (s) {
        case SearchStrategy::TermMatch:
            return "#d62728";
        case SearchStrategy::BitOpScan:
            return "#ff7f0e";
        case SearchStrategy::Filtered:
            return "#1f77b4";
        case SearchStrategy::FilteredPermuted:
            return "#2ca02c";
    }
    return "#000000";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_latency_svg(const BenchReport& report, const std::string& title) {
    std::set<uint32_t> radii;
    std::vector<SearchStrategy> strategies;
    double lo = INFINITY, hi = 0;
    for (const auto& c : report.cells) {
        radii.insert(c.radius);
        if (std::find(strategies.begin(), strategies.end(), c.strategy) == strategies.end()) {
            strategies.push_back(c.strategy);
        }
        if (c.mean_us > 0) {
            lo = std::min(lo, c.mean_us);
            hi = std::max(hi, c.mean_us);
        }
    }
    if (radii.empty() || hi <= 0) {
        lo = 1;
        hi = 10;
    }
    const double dlo = std::floor(std::log10(lo));
    const double dhi = std::max(std::ceil(std::log10(hi)), dlo + 1);
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;

    auto x_of = [&](uint32_t r) {
        if (radii.size() < 2) return kLeft + plot_w / 2;
        const double r0 = *radii.begin(), r1 = *radii.rbegin();
        return kLeft + plot_w * (r - r0) / (r1 - r0);
    };
    auto y_of = [&](double us) {
        const double v = std::log10(std::max(us, std::pow(10.0, dlo)));
        return kTop + plot_h * (1.0 - (v - dlo) / (dhi - dlo));
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::string heading =
            title.empty() ? "Mean search latency, m=" + std::to_string(report.m) + ", n=" + std::to_string(report.n)
                          : title;
    svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << escape(heading) << "</text>\n";

    // Decade grid on the log axis.
    for (double d = dlo; d <= dhi; d += 1) {
        const double y = y_of(std::pow(10.0, d));
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << num(y)
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e" << d
            << "</text>\n";
    }
    for (uint32_t r : radii) {
        svg << "<text x=\"" << num(x_of(r)) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">" << r
            << "</text>\n";
    }
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\">Hamming radius r</text>\n";
    svg << "<text transform=\"translate(18," << kTop + plot_h / 2
        << ") rotate(-90)\" text-anchor=\"middle\">mean latency (us, log scale)</text>\n";

    for (size_t i = 0; i < strategies.size(); ++i) {
        const auto s = strategies[i];
        std::ostringstream pts;
        for (uint32_t r : radii) {
            if (const auto* c = report.find(s, r)) {
                pts << num(x_of(r)) << ',' << num(y_of(c->mean_us)) << ' ';
                svg << "<circle cx=\"" << num(x_of(r)) << "\" cy=\"" << num(y_of(c->mean_us)) << "\" r=\"3\" fill=\""
                    << color_for(s) << "\"/>\n";
            }
        }
        svg << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << color_for(s) << "\" points=\"" << pts.str()
            << "\"/>\n";
        const double ly = kTop + 16 + 20.0 * static_cast<double>(i);
        svg << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kWidth - kRight + 32
            << "\" y2=\"" << ly - 4 << "\" stroke-width=\"2\" stroke=\"" << color_for(s) << "\"/>\n";
        svg << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly << "\">" << to_string(s) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace fenshses
