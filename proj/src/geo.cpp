#include "tagmap/geo.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "tagmap/error.hpp"
#include "tagmap/io.hpp"

namespace tagmap {

namespace {

constexpr double kDegToRad = kPi / 180.0;
// On-boundary tolerance, in degrees (about 0.1 micrometre).
constexpr double kBoundaryTolDeg = 1e-12;

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
  return (a.lon() - o.lon()) * (b.lat() - o.lat()) - (a.lat() - o.lat()) * (b.lon() - o.lon());
}

int orientation(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) {
  const double c = cross(o, a, b);
  return (c > 0.0) - (c < 0.0);
}

bool within_box(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  return std::min(a.lon(), b.lon()) <= p.lon() && p.lon() <= std::max(a.lon(), b.lon()) &&
         std::min(a.lat(), b.lat()) <= p.lat() && p.lat() <= std::max(a.lat(), b.lat());
}

bool segments_intersect(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c, const GeoPoint& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && within_box(c, a, b)) return true;
  if (o2 == 0 && within_box(d, a, b)) return true;
  if (o3 == 0 && within_box(a, c, d)) return true;
  if (o4 == 0 && within_box(b, c, d)) return true;
  return false;
}

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  const double dx = b.lon() - a.lon();
  const double dy = b.lat() - a.lat();
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return std::hypot(p.lon() - a.lon(), p.lat() - a.lat()) <= kBoundaryTolDeg;
  if (std::abs(cross(a, b, p)) / len > kBoundaryTolDeg) return false;
  const double t = ((p.lon() - a.lon()) * dx + (p.lat() - a.lat()) * dy) / (len * len);
  const double slack = kBoundaryTolDeg / len;
  return t >= -slack && t <= 1.0 + slack;
}

Ring close_ring(Ring ring, const std::string& what) {
  if (!ring.empty() && !(ring.front() == ring.back())) ring.push_back(ring.front());
  // Closed ring of n distinct vertices has n + 1 entries.
  if (ring.size() < 4) {
    throw Error(ErrorCode::InvalidGeometry, what + " needs at least 3 distinct vertices");
  }
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    if (std::abs(ring[i + 1].lon() - ring[i].lon()) > 180.0) {
      throw Error(ErrorCode::Antimeridian, what + " crosses the antimeridian");
    }
  }
  return ring;
}

bool ring_is_simple(const Ring& ring) {
  const std::size_t n = ring.size() - 1;  // edge count
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges may only share their common vertex; reject folds back.
        const GeoPoint& shared = (j == i + 1) ? ring[j] : ring[i];
        const GeoPoint& a = (j == i + 1) ? ring[i] : ring[i + 1];
        const GeoPoint& b = (j == i + 1) ? ring[j + 1] : ring[j];
        if (orientation(shared, a, b) == 0) {
          const double dot = (a.lon() - shared.lon()) * (b.lon() - shared.lon()) +
                             (a.lat() - shared.lat()) * (b.lat() - shared.lat());
          if (dot > 0.0) return false;
        }
        continue;
      }
      if (segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1])) return false;
    }
  }
  return true;
}

bool crosses_ray(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  if ((a.lat() > p.lat()) == (b.lat() > p.lat())) return false;
  const double x = a.lon() + (p.lat() - a.lat()) * (b.lon() - a.lon()) / (b.lat() - a.lat());
  return p.lon() < x;
}

}  // namespace

GeoPoint::GeoPoint(double lat_deg, double lon_deg) : lat_(lat_deg), lon_(lon_deg) {
  if (!std::isfinite(lat_deg) || !std::isfinite(lon_deg)) {
    throw Error(ErrorCode::InvalidArgument, "non-finite coordinate");
  }
  if (lat_deg < -90.0 || lat_deg > 90.0) {
    throw Error(ErrorCode::InvalidArgument, "latitude out of range: " + std::to_string(lat_deg));
  }
  if (lon_deg < -180.0 || lon_deg > 180.0) {
    throw Error(ErrorCode::InvalidArgument, "longitude out of range: " + std::to_string(lon_deg));
  }
  if (lon_ == 180.0) lon_ = -180.0;
}

BoundingBox BoundingBox::united(const BoundingBox& other) const noexcept {
  return {std::min(min_lat, other.min_lat), std::max(max_lat, other.max_lat),
          std::min(min_lon, other.min_lon), std::max(max_lon, other.max_lon)};
}

RegionPolygon::RegionPolygon(std::string region_id, Ring exterior, std::vector<Ring> holes)
    : region_id_(std::move(region_id)) {
  exterior_ = close_ring(std::move(exterior), "exterior of '" + region_id_ + "'");
  if (!ring_is_simple(exterior_)) {
    throw Error(ErrorCode::InvalidGeometry, "exterior of '" + region_id_ + "' self-intersects");
  }
  if (ring_signed_area_deg2(exterior_) == 0.0) {
    throw Error(ErrorCode::InvalidGeometry, "exterior of '" + region_id_ + "' has zero area");
  }
  holes_.reserve(holes.size());
  for (auto& h : holes) holes_.push_back(close_ring(std::move(h), "hole of '" + region_id_ + "'"));

  bbox_ = {exterior_[0].lat(), exterior_[0].lat(), exterior_[0].lon(), exterior_[0].lon()};
  for (const auto& p : exterior_) {
    bbox_.min_lat = std::min(bbox_.min_lat, p.lat());
    bbox_.max_lat = std::max(bbox_.max_lat, p.lat());
    bbox_.min_lon = std::min(bbox_.min_lon, p.lon());
    bbox_.max_lon = std::max(bbox_.max_lon, p.lon());
  }
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat() * kDegToRad;
  const double phi2 = b.lat() * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon() - a.lon()) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

DegreeSteps local_degree_steps(const GeoPoint& at, double spacing_m) {
  if (!(spacing_m > 0.0) || !std::isfinite(spacing_m)) {
    throw Error(ErrorCode::InvalidArgument, "spacing_m must be positive");
  }
  if (std::abs(at.lat()) >= 89.0) {
    throw Error(ErrorCode::PoleProximity,
                "local projection undefined at latitude " + std::to_string(at.lat()));
  }
  const double dlat = spacing_m / kMetersPerDegree;
  return {dlat, dlat / std::cos(at.lat() * kDegToRad)};
}

double ring_signed_area_deg2(std::span<const GeoPoint> ring) noexcept {
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    twice += ring[i].lon() * ring[i + 1].lat() - ring[i + 1].lon() * ring[i].lat();
  }
  return twice / 2.0;
}

bool point_in_polygon(const GeoPoint& p, const RegionPolygon& poly) noexcept {
  const auto& box = poly.bbox();
  if (p.lat() < box.min_lat - kBoundaryTolDeg || p.lat() > box.max_lat + kBoundaryTolDeg ||
      p.lon() < box.min_lon - kBoundaryTolDeg || p.lon() > box.max_lon + kBoundaryTolDeg) {
    return false;
  }
  bool inside = false;
  auto scan = [&](const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      if (on_segment(p, ring[i], ring[i + 1])) return true;
      if (crosses_ray(p, ring[i], ring[i + 1])) inside = !inside;
    }
    return false;
  };
  if (scan(poly.exterior())) return true;
  for (const auto& hole : poly.holes()) {
    if (scan(hole)) return true;
  }
  return inside;
}

BoundingBox bbox_of(std::span<const RegionPolygon> parts) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "no region parts");
  BoundingBox box = parts.front().bbox();
  for (const auto& part : parts.subspan(1)) box = box.united(part.bbox());
  return box;
}

namespace {

Ring parse_ring(const nlohmann::json& coords) {
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2) {
      throw Error(ErrorCode::ParseError, "GeoJSON position must be [lon, lat]");
    }
    ring.emplace_back(c[1].get<double>(), c[0].get<double>());
  }
  return ring;
}

RegionPolygon parse_polygon(const std::string& id, const nlohmann::json& rings) {
  if (!rings.is_array() || rings.empty()) {
    throw Error(ErrorCode::ParseError, "polygon '" + id + "' has no rings");
  }
  std::vector<Ring> holes;
  for (std::size_t i = 1; i < rings.size(); ++i) holes.push_back(parse_ring(rings[i]));
  return RegionPolygon(id, parse_ring(rings[0]), std::move(holes));
}

std::string feature_id(const nlohmann::json& feature, std::size_t index) {
  const auto props = feature.value("properties", nlohmann::json::object());
  for (const char* key : {"region_id", "id", "name"}) {
    if (props.is_object() && props.contains(key)) {
      const auto& v = props[key];
      return v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  if (feature.contains("id")) {
    const auto& v = feature["id"];
    return v.is_string() ? v.get<std::string>() : v.dump();
  }
  return "region-" + std::to_string(index);
}

void append_geometry(std::vector<RegionPolygon>& out, const std::string& id,
                     const nlohmann::json& geometry) {
  const std::string type = geometry.at("type").get<std::string>();
  if (type == "Polygon") {
    out.push_back(parse_polygon(id, geometry.at("coordinates")));
  } else if (type == "MultiPolygon") {
    for (const auto& poly : geometry.at("coordinates")) out.push_back(parse_polygon(id, poly));
  } else {
    throw Error(ErrorCode::ParseError, "unsupported geometry type '" + type + "' for '" + id + "'");
  }
}

}  // namespace

std::vector<RegionPolygon> parse_regions_geojson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("GeoJSON: ") + e.what());
  }
  std::vector<RegionPolygon> out;
  try {
    const std::string type = doc.at("type").get<std::string>();
    if (type == "FeatureCollection") {
      std::size_t index = 0;
      for (const auto& f : doc.at("features")) {
        append_geometry(out, feature_id(f, index), f.at("geometry"));
        ++index;
      }
    } else if (type == "Feature") {
      append_geometry(out, feature_id(doc, 0), doc.at("geometry"));
    } else {
      append_geometry(out, "region-0", doc);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("GeoJSON: ") + e.what());
  }
  if (out.empty()) throw Error(ErrorCode::ParseError, "GeoJSON contains no polygons");
  return out;
}

std::vector<RegionPolygon> load_regions_geojson(const std::filesystem::path& path) {
  return parse_regions_geojson(read_file(path));
}

std::vector<std::pair<std::string, std::vector<RegionPolygon>>> group_by_region(
    std::span<const RegionPolygon> parts) {
  std::vector<std::pair<std::string, std::vector<RegionPolygon>>> groups;
  for (const auto& part : parts) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == part.region_id(); });
    if (it == groups.end()) {
      groups.emplace_back(part.region_id(), std::vector<RegionPolygon>{part});
    } else {
      it->second.push_back(part);
    }
  }
  return groups;
}

}  // namespace tagmap
