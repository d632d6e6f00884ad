#include "hpred/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hpred/error.hpp"

namespace hpred::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b"};

std::string num(double v) {
  if (std::abs(v) < 5e-4) v = 0.0;  // no "-0.000"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
  void pad(double fraction, double minimum) {
    if (empty()) {
      lo = 0.0;
      hi = 1.0;
    }
    const double span = std::max(hi - lo, minimum);
    const double mid = 0.5 * (lo + hi);
    lo = mid - 0.5 * span * (1.0 + fraction);
    hi = mid + 0.5 * span * (1.0 + fraction);
  }
};

// Roughly five round tick values inside [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

void polyline(std::ostringstream& out, const std::vector<std::pair<double, double>>& pts,
              const std::string& style) {
  out << "<polyline fill=\"none\" " << style << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out << ' ';
    out << num(pts[i].first) << ',' << num(pts[i].second);
  }
  out << "\"/>\n";
}

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string line_chart(const std::vector<Series>& series, const ChartLabels& labels) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 60;
  Range xr, yr;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || (!s.error.empty() && s.error.size() != s.y.size())) {
      throw Error(ErrorCode::InvalidArgument, "series '" + s.label + "' is ragged");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.add(s.x[i]);
      const double e = s.error.empty() ? 0.0 : s.error[i];
      yr.add(s.y[i] - e);
      yr.add(s.y[i] + e);
    }
  }
  xr.pad(0.05, 1e-6);
  yr.pad(0.1, 1e-3);
  const auto px = [&](double x) { return L + (x - xr.lo) / (xr.hi - xr.lo) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - yr.lo) / (yr.hi - yr.lo) * (H - T - B); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(labels.title) << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
      << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(xr.lo, xr.hi)) {
    out << "<line x1=\"" << num(px(t)) << "\" y1=\"" << H - B << "\" x2=\"" << num(px(t))
        << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/>";
    out << "<text x=\"" << num(px(t)) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
        << tick_label(t) << "</text>\n";
  }
  for (double t : ticks(yr.lo, yr.hi)) {
    out << "<line x1=\"" << L - 5 << "\" y1=\"" << num(py(t)) << "\" x2=\"" << W - R
        << "\" y2=\"" << num(py(t)) << "\" stroke=\"#dddddd\"/>";
    out << "<text x=\"" << L - 8 << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">"
        << tick_label(t) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
      << escape(labels.x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << escape(labels.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts.emplace_back(px(s.x[i]), py(s.y[i]));
    polyline(out, pts, "stroke=\"" + color + "\" stroke-width=\"2\"");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!s.error.empty() && s.error[i] > 0.0) {
        const double x = px(s.x[i]);
        const double y0 = py(s.y[i] - s.error[i]), y1 = py(s.y[i] + s.error[i]);
        out << "<path d=\"M" << num(x) << ',' << num(y0) << "V" << num(y1) << "M" << num(x - 4)
            << ',' << num(y0) << "h8M" << num(x - 4) << ',' << num(y1) << "h8\" stroke=\"" << color
            << "\"/>\n";
      }
      out << "<circle cx=\"" << num(pts[i].first) << "\" cy=\"" << num(pts[i].second)
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(k);
    out << "<line x1=\"" << W - R + 12 << "\" y1=\"" << num(ly) << "\" x2=\"" << W - R + 32
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    out << "<text x=\"" << W - R + 38 << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string trajectory_panels(const std::vector<ReferencePath>& paths,
                              const std::vector<TrajectoryPanel>& panels,
                              const std::string& title) {
  constexpr double P = 320, T = 60, M = 10;
  // Fit the view to the trajectories, with the paths only as context.
  Range xr, yr;
  for (const auto& panel : panels) {
    for (const auto* group : {&panel.pred, &panel.ego}) {
      for (const auto& line : *group) {
        for (const auto& p : line) {
          xr.add(p.x);
          yr.add(p.y);
        }
      }
    }
  }
  xr.pad(0.6, 20.0);
  yr.pad(0.6, 20.0);
  const double span = std::max(xr.hi - xr.lo, yr.hi - yr.lo);
  const double cx = 0.5 * (xr.lo + xr.hi), cy = 0.5 * (yr.lo + yr.hi);
  const double scale = (P - 2 * M) / span;
  const double W = P * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  const double H = P + T;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& panel = panels[k];
    const double ox = P * static_cast<double>(k);
    const auto map = [&](const CartesianPoint& p) {
      return std::pair{ox + P / 2 + (p.x - cx) * scale, T + P / 2 - (p.y - cy) * scale};
    };
    out << "<g>\n<clipPath id=\"clip" << k << "\"><rect x=\"" << ox << "\" y=\"" << T
        << "\" width=\"" << P << "\" height=\"" << P << "\"/></clipPath>\n";
    out << "<rect x=\"" << ox + 2 << "\" y=\"" << T << "\" width=\"" << P - 4 << "\" height=\""
        << P - 4 << "\" fill=\"none\" stroke=\"#999999\"/>\n";
    std::string label = panel.title;
    if (panel.collision_rate) label += " (collision " + num(*panel.collision_rate) + ")";
    out << "<text x=\"" << ox + P / 2 << "\" y=\"" << T - 8 << "\" text-anchor=\"middle\">"
        << escape(label) << "</text>\n";
    out << "<g clip-path=\"url(#clip" << k << ")\">\n";
    for (const auto& path : paths) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& v : path.vertices()) pts.push_back(map(v));
      polyline(out, pts, "stroke=\"#cccccc\" stroke-width=\"" + num(2 * 1.8 * scale) + "\"");
    }
    const auto draw = [&](const std::vector<std::vector<CartesianPoint>>& lines,
                          const char* color) {
      for (const auto& line : lines) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : line) pts.push_back(map(p));
        polyline(out, pts, std::string("stroke=\"") + color + "\" stroke-opacity=\"0.5\"");
      }
    };
    draw(panel.ego, "#1f77b4");
    draw(panel.pred, "#d62728");
    out << "</g>\n</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace hpred::svg
