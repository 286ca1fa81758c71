#pragma once

#include <cstdio>
#include <string>

#include "scenesum/metrics.hpp"

namespace scenesum {

namespace detail {
inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

/// Line chart of a divergence curve: one polyline, axes with five ticks
/// each, and a title. Fixed 800x500 viewBox; y spans [0, 1].
inline std::string curve_svg(const DivergenceCurve& c, const std::string& title) {
  require(!c.thresholds.empty(), "cannot plot an empty curve");
  constexpr double W = 800, H = 500, left = 70, right = 30, top = 50, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  const double r_max = c.thresholds.back() > 0.0 ? c.thresholds.back() : 1.0;
  auto sx = [&](double r) { return left + pw * r / r_max; };
  auto sy = [&](double d) { return top + ph * (1.0 - d); };
  using detail::fmt2;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" width=\"800\" height=\"500\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  std::string esc;
  for (char ch : title) {
    if (ch == '<') esc += "&lt;";
    else if (ch == '>') esc += "&gt;";
    else if (ch == '&') esc += "&amp;";
    else esc += ch;
  }
  s += "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">" + esc + "</text>\n";
  s += "<line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(top + ph) + "\" x2=\"" + fmt2(left + pw) + "\" y2=\"" +
       fmt2(top + ph) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(top) + "\" x2=\"" + fmt2(left) + "\" y2=\"" + fmt2(top + ph) +
       "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double r = r_max * i / 5.0, x = sx(r);
    s += "<line x1=\"" + fmt2(x) + "\" y1=\"" + fmt2(top + ph) + "\" x2=\"" + fmt2(x) + "\" y2=\"" + fmt2(top + ph + 6) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(top + ph + 22) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + fmt2(r) + "</text>\n";
    const double d = i / 5.0, y = sy(d);
    s += "<line x1=\"" + fmt2(left - 6) + "\" y1=\"" + fmt2(y) + "\" x2=\"" + fmt2(left) + "\" y2=\"" + fmt2(y) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt2(left - 10) + "\" y=\"" + fmt2(y + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + fmt2(d) + "</text>\n";
  }
  s += "<text x=\"" + fmt2(left + pw / 2) + "\" y=\"" + fmt2(H - 15) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">distance threshold r (m)</text>\n";
  s += "<text x=\"20\" y=\"" + fmt2(top + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"14\" transform=\"rotate(-90 20 " + fmt2(top + ph / 2) + ")\">divergence D</text>\n";
  s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
    if (i) s += ' ';
    s += fmt2(sx(c.thresholds[i])) + "," + fmt2(sy(c.values[i]));
  }
  s += "\"/>\n</svg>\n";
  return s;
}

}  // namespace scenesum
