// SPDX-License-Identifier: Apache-2.0
#include "qkf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qkf/text.hpp"

namespace qkf::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
constexpr double kLeft = 64, kRight = 150, kTop = 36, kBottom = 48;

std::string num(double v) { return format_fixed(v, 2); }

std::string tick_label(double v) {
  std::string s = format_fixed(v, 3);
  while (s.find('.') != std::string::npos && (s.back() == '0' || s.back() == '.')) {
    const bool dot = s.back() == '.';
    s.pop_back();
    if (dot) break;
  }
  return s == "-0" ? "0" : s;
}

struct Frame {
  double x0, x1, y0, y1, w, h;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (w - kLeft - kRight); }
  double py(double y) const { return h - kBottom - (y - y0) / (y1 - y0) * (h - kTop - kBottom); }
};

void pad(double& lo, double& hi) {
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

void header(std::ostringstream& os, const PlotSpec& spec) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(spec.width) << "\" height=\""
     << num(spec.height) << "\" viewBox=\"0 0 " << num(spec.width) << ' ' << num(spec.height) << "\">\n";
  if (!spec.comment.empty()) os << "<!-- " << escape(spec.comment) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(spec.width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"14\">" << escape(spec.title) << "</text>\n";
}

void axes(std::ostringstream& os, const PlotSpec& spec, const Frame& f, bool x_ticks = true) {
  const double bx = kLeft, by = spec.height - kBottom, ex = spec.width - kRight, ey = kTop;
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << num(bx) << "\" y1=\"" << num(by) << "\" x2=\"" << num(ex) << "\" y2=\"" << num(by) << "\"/>\n";
  os << "<line x1=\"" << num(bx) << "\" y1=\"" << num(by) << "\" x2=\"" << num(bx) << "\" y2=\"" << num(ey) << "\"/>\n";
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0, yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
    if (x_ticks)
      os << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(by + 14) << "\" text-anchor=\"middle\">"
         << tick_label(xv) << "</text>\n";
    os << "<text x=\"" << num(bx - 6) << "\" y=\"" << num(f.py(yv) + 3) << "\" text-anchor=\"end\">"
       << tick_label(yv) << "</text>\n";
  }
  os << "<text x=\"" << num((bx + ex) / 2) << "\" y=\"" << num(spec.height - 12) << "\" text-anchor=\"middle\">"
     << escape(spec.x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << num((by + ey) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << num((by + ey) / 2) << ")\">" << escape(spec.y_label) << "</text>\n</g>\n";
}

}  // namespace

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '-':
        // "--" is not allowed inside XML comments
        out += (!out.empty() && out.back() == '-') ? " -" : "-";
        break;
      default: out += c;
    }
  }
  return out;
}

std::string plot(const PlotSpec& spec, const std::vector<Series>& series) {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (spec.x_lo < spec.x_hi) x0 = spec.x_lo, x1 = spec.x_hi;
  if (spec.y_lo < spec.y_hi) y0 = spec.y_lo, y1 = spec.y_hi;
  pad(x0, x1);
  pad(y0, y1);
  const Frame f{x0, x1, y0, y1, spec.width, spec.height};

  std::ostringstream os;
  header(os, spec);
  axes(os, spec, f);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += num(f.px(s.x[i])) + "," + num(f.py(s.y[i])) + " ";
      if (s.markers)
        os << "<circle cx=\"" << num(f.px(s.x[i])) << "\" cy=\"" << num(f.py(s.y[i])) << "\" r=\"2.5\" fill=\""
           << color << "\" fill-opacity=\"0.6\"/>\n";
    }
    if (s.lines && !pts.empty())
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
    const double ly = kTop + 14 + 16 * static_cast<double>(k);
    os << "<rect x=\"" << num(spec.width - kRight + 12) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" "
       << "fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << num(spec.width - kRight + 26) << "\" y=\"" << num(ly + 1)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string box_plot(const PlotSpec& spec, const std::vector<std::string>& groups,
                     const std::vector<std::vector<double>>& values) {
  double y0 = INFINITY, y1 = -INFINITY;
  for (const auto& v : values)
    for (double y : v)
      if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (spec.y_lo < spec.y_hi) y0 = spec.y_lo, y1 = spec.y_hi;
  pad(y0, y1);
  const double n = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  const Frame f{-0.5, n - 0.5, y0, y1, spec.width, spec.height};

  std::ostringstream os;
  header(os, spec);
  axes(os, spec, f, false);
  for (std::size_t g = 0; g < values.size() && g < groups.size(); ++g) {
    std::vector<double> v;
    for (double y : values[g])
      if (std::isfinite(y)) v.push_back(y);
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    auto q = [&](double p) {
      const double pos = p * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, v.size() - 1);
      return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
    };
    const double cx = f.px(static_cast<double>(g)), half = 0.3 * (f.px(1) - f.px(0));
    os << "<g stroke=\"#1f77b4\" fill=\"none\">\n";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(f.py(v.front())) << "\" x2=\"" << num(cx) << "\" y2=\""
       << num(f.py(v.back())) << "\"/>\n";
    os << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(f.py(q(0.75))) << "\" width=\"" << num(2 * half)
       << "\" height=\"" << num(f.py(q(0.25)) - f.py(q(0.75))) << "\" fill=\"white\"/>\n";
    os << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(f.py(q(0.5))) << "\" x2=\"" << num(cx + half)
       << "\" y2=\"" << num(f.py(q(0.5))) << "\" stroke=\"#d62728\"/>\n</g>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << num(spec.height - kBottom + 26)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << escape(groups[g]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qkf::svg
