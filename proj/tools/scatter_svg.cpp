#include "scatter_svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace emvqm::cli {

namespace {

constexpr double kW = 480, kH = 360, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;

struct Axis {
  double lo, hi;

  static Axis of(std::span<const double> v) {
    double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string scatter_svg(std::span<const double> predicted, std::span<const double> dmos,
                        const std::optional<LogisticFit>& curve) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) +
                  "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (predicted.empty()) return s + "</svg>\n";
  const Axis ax = Axis::of(predicted), ay = Axis::of(dmos);
  const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
  s += "<path d=\"M" + num(x0) + " " + num(y1) + " V" + num(y0) + " H" + num(x1) +
       "\" stroke=\"black\" fill=\"none\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = ax.lo + (ax.hi - ax.lo) * i / 4.0, vy = ay.lo + (ay.hi - ay.lo) * i / 4.0;
    const double px = ax.map(vx, x0, x1), py = ay.map(vy, y0, y1);
    s += "<line x1=\"" + num(px) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px) + "\" y2=\"" + num(y0 + 5) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + 18) + "\" text-anchor=\"middle\">" + label(vx) + "</text>\n";
    s += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(py) +
         "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(py + 4) + "\" text-anchor=\"end\">" + label(vy) + "</text>\n";
  }
  s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kH - 10) + "\" text-anchor=\"middle\">predicted</text>\n";
  s += "<text x=\"14\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       num((y0 + y1) / 2) + ")\">DMOS</text>\n";
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    s += "<circle cx=\"" + num(ax.map(predicted[i], x0, x1)) + "\" cy=\"" + num(ay.map(dmos[i], y0, y1)) +
         "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  if (curve) {
    std::string d;
    for (int i = 0; i <= 100; ++i) {
      const double v = ax.lo + (ax.hi - ax.lo) * i / 100.0;
      const double py = std::clamp(ay.map((*curve)(v), y0, y1), y1, y0);
      d += (i ? " L" : "M") + num(ax.map(v, x0, x1)) + " " + num(py);
    }
    s += "<path d=\"" + d + "\" stroke=\"firebrick\" fill=\"none\"/>\n";
  }
  return s + "</svg>\n";
}

}  // namespace emvqm::cli
