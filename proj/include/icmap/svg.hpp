#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "icmap/instance.hpp"
#include "icmap/mapstore.hpp"
#include "icmap/sweep.hpp"

namespace icmap {

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

inline const char* class_color(ElementClass c) {
  switch (c) {
    case ElementClass::kDivider: return "#d95f02";
    case ElementClass::kBoundary: return "#1b9e77";
    case ElementClass::kPedCrossing: return "#7570b3";
  }
  return "#000000";
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;

  void add(const Vec2& p) {
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  bool empty() const { return x0 > x1; }
};

}  // namespace detail

struct SvgLayer {
  std::string name;
  const GlobalMap* map = nullptr;
  bool dashed = false;
};

/// Top-down drawing of one or more maps, y pointing up, one <g> per layer.
inline std::string render_svg(const std::vector<SvgLayer>& layers, double margin = 5.0) {
  detail::Bounds b;
  for (const SvgLayer& l : layers) {
    for (const auto& [id, e] : l.map->entries) for (const Vec2& p : e.instance.points) b.add(p);
  }
  if (b.empty()) b = {0.0, 0.0, 1.0, 1.0};
  const double x0 = b.x0 - margin, y1 = b.y1 + margin;
  const double w = b.x1 - b.x0 + 2 * margin, h = b.y1 - b.y0 + 2 * margin;
  using detail::fmt_num;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt_num(w) + " " + fmt_num(h) + "\" width=\"" +
         fmt_num(std::min(2000.0, w * 4)) + "\" height=\"" + fmt_num(std::min(2000.0, h * 4)) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const SvgLayer& l : layers) {
    out += "<g id=\"" + l.name + "\" fill=\"none\" stroke-width=\"0.3\"" +
           (l.dashed ? std::string(" stroke-dasharray=\"1 0.6\" opacity=\"0.6\"") : std::string()) + ">\n";
    for (const auto& [id, e] : l.map->entries) {
      std::string pts;
      for (const Vec2& p : e.instance.points) {
        if (!pts.empty()) pts += ' ';
        pts += fmt_num(p.x - x0) + "," + fmt_num(y1 - p.y);
      }
      out += std::string("<") + (e.instance.is_polygon() ? "polygon" : "polyline") + " data-id=\"" + std::to_string(id) +
             "\" class=\"" + std::string(class_name(e.instance.cls)) + "\" stroke=\"" +
             detail::class_color(e.instance.cls) + "\" points=\"" + pts + "\"/>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

/// Line chart of a smoothing sweep: one series per class.
inline std::string render_sweep_svg(const std::vector<SweepRow>& rows) {
  using detail::fmt_num;
  const double W = 640, H = 400, L = 60, R = 20, T = 20, B = 50;
  double smax = 0.0, emax = 0.0;
  for (const SweepRow& r : rows) {
    smax = std::max(smax, r.s);
    emax = std::max({emax, r.cd_divider, r.cd_boundary});
  }
  if (smax <= 0.0) smax = 1.0;
  if (emax <= 0.0) emax = 1.0;
  auto px = [&](double s) { return L + (W - L - R) * s / smax; };
  auto py = [&](double e) { return H - B - (H - T - B) * e / emax; };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + fmt_num(L) + "\" y1=\"" + fmt_num(H - B) + "\" x2=\"" + fmt_num(W - R) + "\" y2=\"" + fmt_num(H - B) + "\"/>\n";
  out += "<line x1=\"" + fmt_num(L) + "\" y1=\"" + fmt_num(T) + "\" x2=\"" + fmt_num(L) + "\" y2=\"" + fmt_num(H - B) + "\"/>\n";
  out += "</g>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<text x=\"" + fmt_num(W / 2) + "\" y=\"" + fmt_num(H - 10) + "\" text-anchor=\"middle\">smoothing parameter s</text>\n";
  out += "<text x=\"15\" y=\"" + fmt_num(H / 2) + "\" transform=\"rotate(-90 15 " + fmt_num(H / 2) +
         ")\" text-anchor=\"middle\">Chamfer distance (m)</text>\n";
  out += "<text x=\"" + fmt_num(L) + "\" y=\"" + fmt_num(H - B + 15) + "\" text-anchor=\"middle\">0</text>\n";
  out += "<text x=\"" + fmt_num(W - R) + "\" y=\"" + fmt_num(H - B + 15) + "\" text-anchor=\"middle\">" + fmt_num(smax) + "</text>\n";
  out += "<text x=\"" + fmt_num(L - 5) + "\" y=\"" + fmt_num(T + 4) + "\" text-anchor=\"end\">" + fmt_num(emax) + "</text>\n";
  out += "</g>\n";
  auto series = [&](const char* name, const char* color, auto get) {
    std::string pts;
    for (const SweepRow& r : rows) {
      if (!pts.empty()) pts += ' ';
      pts += fmt_num(px(r.s)) + "," + fmt_num(py(get(r)));
    }
    out += std::string("<polyline id=\"") + name + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  };
  series("divider", detail::class_color(ElementClass::kDivider), [](const SweepRow& r) { return r.cd_divider; });
  series("boundary", detail::class_color(ElementClass::kBoundary), [](const SweepRow& r) { return r.cd_boundary; });
  out += "</svg>\n";
  return out;
}

}  // namespace icmap
