#pragma once

// Minimal self-contained SVG line plots.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace fecg::plot {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
};

struct Figure {
  std::string title;
  std::string x_label, y_label;
  int width = 900, height = 360;
  bool log_y = false;
  std::vector<Series> series;
};

namespace detail {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace detail

inline std::string render_svg(const Figure& fig) {
  const double ml = 70, mr = 20, mt = 36, mb = 48;
  const double pw = fig.width - ml - mr, ph = fig.height - mt - mb;
  auto ty = [&](double v) { return fig.log_y ? std::log10(std::max(v, 1e-300)) : v; };

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : fig.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (fig.log_y && !(s.y[i] > 0.0))) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return mt + (1.0 - (ty(v) - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fig.width << "\" height=\"" << fig.height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fig.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(fig.title)
    << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    const double gx = ml + pw * k / 4.0, gy = mt + ph * (1.0 - k / 4.0);
    o << "<text x=\"" << gx << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">" << detail::num(xv) << "</text>\n";
    o << "<text x=\"" << ml - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
      << detail::num(fig.log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
    o << "<line x1=\"" << ml << "\" x2=\"" << ml + pw << "\" y1=\"" << gy << "\" y2=\"" << gy
      << "\" stroke=\"#ddd\"/>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << fig.height - 8 << "\" text-anchor=\"middle\">"
    << detail::escape(fig.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::escape(fig.y_label) << "</text>\n";

  int legend = 0;
  for (const auto& s : fig.series) {
    o << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << s.color << "\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (fig.log_y && !(s.y[i] > 0.0))) continue;
      o << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i])) << ' ';
    }
    o << "\"/>\n";
    const double ly = mt + 14 + 16 * legend++;
    o << "<line x1=\"" << ml + pw - 150 << "\" x2=\"" << ml + pw - 130 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << ml + pw - 124 << "\" y=\"" << ly << "\">" << detail::escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Reference vs estimate over a time window starting at `t0` seconds.
inline Figure overlay(const std::string& title, const std::vector<double>& reference, const std::vector<double>& estimate,
                      double fs, double t0 = 0.0, double seconds = 5.0) {
  Figure f;
  f.title = title;
  f.x_label = "time (s)";
  f.y_label = "amplitude (uV)";
  const auto first = static_cast<std::size_t>(std::max(0.0, t0 * fs));
  const auto last = std::min(reference.size(), first + static_cast<std::size_t>(seconds * fs));
  Series r{"reference", {}, {}, "#222222"}, e{"estimate", {}, {}, "#d62728"};
  for (std::size_t i = first; i < last; ++i) {
    const double t = static_cast<double>(i) / fs;
    r.x.push_back(t);
    r.y.push_back(reference[i]);
    if (i < estimate.size()) {
      e.x.push_back(t);
      e.y.push_back(estimate[i]);
    }
  }
  f.series = {r, e};
  return f;
}

}  // namespace fecg::plot
