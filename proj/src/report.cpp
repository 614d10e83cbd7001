#include "tagmap/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tagmap/error.hpp"

namespace tagmap {

namespace {

constexpr double kMapWidth = 800.0;
constexpr double kMargin = 20.0;
constexpr double kLegendHeight = 60.0;
constexpr const char* kFill = "#b2182b";

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Projection {
  BoundingBox box;
  double scale;  // pixels per projected degree
  double kx;     // cos(mid latitude)
  double map_height;

  std::pair<double, double> operator()(const GeoPoint& p) const {
    return {kMargin + (p.lon() - box.min_lon) * kx * scale, kMargin + (box.max_lat - p.lat()) * scale};
  }
};

Projection make_projection(std::span<const RegionPolygon> regions) {
  const BoundingBox box = bbox_of(regions);
  const double kx = std::cos(box.mid_lat() * kPi / 180.0);
  const double span_x = std::max((box.max_lon - box.min_lon) * kx, 1e-12);
  const double scale = (kMapWidth - 2 * kMargin) / span_x;
  return {box, scale, kx, (box.max_lat - box.min_lat) * scale};
}

std::string ring_path(const Ring& ring, const Projection& proj) {
  std::string d;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const auto [x, y] = proj(ring[i]);
    d += fmt::format("{}{:.2f},{:.2f} ", i == 0 ? "M" : "L", x, y);
  }
  d += "Z";
  return d;
}

nlohmann::json ring_coords(const Ring& ring) {
  auto arr = nlohmann::json::array();
  for (const auto& p : ring) arr.push_back({p.lon(), p.lat()});
  return arr;
}

}  // namespace

std::string emit_choropleth(std::span<const RegionScore> scores, std::span<const RegionPolygon> regions) {
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "choropleth needs at least one score");
  const Projection proj = make_projection(regions);

  std::map<std::string, const RegionScore*> by_id;
  double lo = scores.front().mean_level;
  double hi = lo;
  for (const auto& s : scores) {
    by_id[s.region_id] = &s;
    lo = std::min(lo, s.mean_level);
    hi = std::max(hi, s.mean_level);
  }

  std::map<std::string, std::string> paths;  // region_id -> path data
  for (const auto& part : regions) {
    auto& d = paths[part.region_id()];
    if (!d.empty()) d += " ";
    d += ring_path(part.exterior(), proj);
    for (const auto& hole : part.holes()) d += " " + ring_path(hole, proj);
  }

  const double height = proj.map_height + 2 * kMargin + kLegendHeight;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      kMapWidth, height, kMapWidth, height);
  svg += "<defs>\n";
  svg += "<pattern id=\"nodata\" patternUnits=\"userSpaceOnUse\" width=\"8\" height=\"8\">"
         "<path d=\"M0,8 L8,0\" stroke=\"#888888\" stroke-width=\"1\"/></pattern>\n";
  svg += fmt::format(
      "<linearGradient id=\"scale\"><stop offset=\"0\" stop-color=\"{0}\" stop-opacity=\"0\"/>"
      "<stop offset=\"1\" stop-color=\"{0}\" stop-opacity=\"1\"/></linearGradient>\n",
      kFill);
  svg += "</defs>\n";
  svg += "<g id=\"regions\" stroke=\"#333333\" stroke-width=\"0.8\" fill-rule=\"evenodd\">\n";
  for (const auto& [id, d] : paths) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      svg += fmt::format("<path data-region=\"{}\" d=\"{}\" fill=\"url(#nodata)\"/>\n", xml_escape(id), d);
      continue;
    }
    const double level = it->second->mean_level;
    const double opacity = hi > lo ? (level - lo) / (hi - lo) : 1.0;
    svg += fmt::format("<path data-region=\"{}\" data-mean-level=\"{}\" d=\"{}\" fill=\"{}\" fill-opacity=\"{:.4f}\"/>\n",
                       xml_escape(id), level, d, kFill, opacity);
  }
  svg += "</g>\n";

  const double ly = proj.map_height + 2 * kMargin + 10;
  svg += "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += fmt::format("<rect x=\"{:.0f}\" y=\"{:.2f}\" width=\"200\" height=\"12\" fill=\"url(#scale)\" stroke=\"#333333\"/>\n",
                     kMargin, ly);
  svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.2f}\">{:.6g}</text>\n", kMargin, ly + 26, lo);
  svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.6g}</text>\n", kMargin + 200, ly + 26, hi);
  svg += fmt::format("<rect x=\"{:.0f}\" y=\"{:.2f}\" width=\"12\" height=\"12\" fill=\"url(#nodata)\" stroke=\"#333333\"/>\n",
                     kMargin + 230, ly);
  svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.2f}\">no data</text>\n", kMargin + 248, ly + 10);
  svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.2f}\">mean graffiti level</text>\n", kMargin + 320, ly + 10);
  svg += "</g>\n</svg>\n";
  return svg;
}

std::string scores_to_geojson(std::span<const RegionScore> scores, std::span<const RegionPolygon> regions) {
  std::map<std::string, const RegionScore*> by_id;
  for (const auto& s : scores) by_id[s.region_id] = &s;

  std::map<std::string, nlohmann::json> polygons;
  for (const auto& part : regions) {
    auto rings = nlohmann::json::array({ring_coords(part.exterior())});
    for (const auto& hole : part.holes()) rings.push_back(ring_coords(hole));
    auto& list = polygons[part.region_id()];
    if (list.is_null()) list = nlohmann::json::array();
    list.push_back(std::move(rings));
  }

  auto features = nlohmann::json::array();
  for (auto& [id, polys] : polygons) {
    nlohmann::json geometry = polys.size() == 1
                                  ? nlohmann::json{{"type", "Polygon"}, {"coordinates", polys[0]}}
                                  : nlohmann::json{{"type", "MultiPolygon"}, {"coordinates", polys}};
    const auto it = by_id.find(id);
    nlohmann::json props = {{"region_id", id},
                            {"n", it == by_id.end() ? 0 : it->second->n},
                            {"mean_level", it == by_id.end() ? nlohmann::json(nullptr) : nlohmann::json(it->second->mean_level)}};
    features.push_back({{"type", "Feature"}, {"properties", std::move(props)}, {"geometry", std::move(geometry)}});
  }
  return nlohmann::json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump(1) + "\n";
}

std::string error_chart_svg(const BiasVarianceReport& report) {
  constexpr double W = 640;
  constexpr double H = 400;
  constexpr double L = 70;
  constexpr double R = 20;
  constexpr double T = 30;
  constexpr double B = 50;

  std::map<Strategy, std::vector<std::pair<double, double>>> series;
  double x_lo = 0, x_hi = 0, y_hi = 0;
  bool first = true;
  for (const auto& row : report.rows) {
    series[row.strategy].emplace_back(row.param, row.mean_abs_error);
    if (first) {
      x_lo = x_hi = row.param;
      first = false;
    }
    x_lo = std::min(x_lo, row.param);
    x_hi = std::max(x_hi, row.param);
    y_hi = std::max(y_hi, row.mean_abs_error);
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  if (y_hi <= 0) y_hi = 1;
  auto px = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / y_hi * (H - T - B); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      W, H);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000\"/>\n", L, H - B, W - R);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000\"/>\n", L, T, H - B);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">sampling parameter (spacing m / n)</text>\n",
                     (L + W - R) / 2, H - 12);
  svg += fmt::format("<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">mean |error|</text>\n",
                     (T + H - B) / 2, (T + H - B) / 2);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.4g}</text>\n", L - 4, py(y_hi) + 4, y_hi);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">0</text>\n", L - 4, H - B + 4);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.6g}</text>\n", L, H - B + 16, x_lo);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.6g}</text>\n", W - R, H - B + 16, x_hi);

  int legend_row = 0;
  for (auto& [strategy, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = strategy == Strategy::Systematic ? "#2166ac" : "#b2182b";
    std::string d;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d += fmt::format("{}{:.2f},{:.2f} ", i == 0 ? "M" : "L", px(pts[i].first), py(pts[i].second));
    }
    svg += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", d, color);
    for (const auto& [x, y] : pts) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(x), py(y), color);
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", W - R - 90, T + 14 * legend_row, color,
                       to_string(strategy));
    ++legend_row;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace tagmap
