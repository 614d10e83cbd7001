#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tagmap {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kPi = 3.14159265358979323846;
// Length of one degree of arc on the mean sphere.
inline constexpr double kMetersPerDegree = kPi * kEarthRadiusM / 180.0;

// Geodetic point in degrees. Latitude in [-90, 90], longitude normalized to
// [-180, 180). Throws Error(InvalidArgument) on non-finite or out-of-range input.
class GeoPoint {
 public:
  GeoPoint(double lat_deg, double lon_deg);

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

struct BoundingBox {
  double min_lat = 0.0;
  double max_lat = 0.0;
  double min_lon = 0.0;
  double max_lon = 0.0;

  double mid_lat() const noexcept { return 0.5 * (min_lat + max_lat); }
  bool contains(const GeoPoint& p) const noexcept {
    return p.lat() >= min_lat && p.lat() <= max_lat && p.lon() >= min_lon && p.lon() <= max_lon;
  }
  BoundingBox united(const BoundingBox& other) const noexcept;
};

using Ring = std::vector<GeoPoint>;

// A survey region. Rings are closed on construction (first == last). The
// exterior must be simple with nonzero area; edges may not cross the
// antimeridian.
class RegionPolygon {
 public:
  RegionPolygon(std::string region_id, Ring exterior, std::vector<Ring> holes = {});

  const std::string& region_id() const noexcept { return region_id_; }
  const Ring& exterior() const noexcept { return exterior_; }
  const std::vector<Ring>& holes() const noexcept { return holes_; }
  const BoundingBox& bbox() const noexcept { return bbox_; }

 private:
  std::string region_id_;
  Ring exterior_;
  std::vector<Ring> holes_;
  BoundingBox bbox_;
};

// Great-circle distance on the mean sphere.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

struct DegreeSteps {
  double dlat_deg;
  double dlon_deg;
};

// Local equirectangular step sizes for `spacing_m` at `at`. Throws
// PoleProximity when |lat| >= 89.
DegreeSteps local_degree_steps(const GeoPoint& at, double spacing_m);

// Even-odd test in the lat/lon plane; points on any ring boundary are inside.
bool point_in_polygon(const GeoPoint& p, const RegionPolygon& poly) noexcept;

// Signed shoelace area of a ring in square degrees (lon as x, lat as y).
double ring_signed_area_deg2(std::span<const GeoPoint> ring) noexcept;

BoundingBox bbox_of(std::span<const RegionPolygon> parts);

// Reads every Polygon / MultiPolygon feature in a GeoJSON document. A
// MultiPolygon yields one RegionPolygon per part, all sharing the feature's
// region_id (taken from properties.region_id, then id, then name).
std::vector<RegionPolygon> load_regions_geojson(const std::filesystem::path& path);
std::vector<RegionPolygon> parse_regions_geojson(const std::string& text);

// Groups parts by region_id, preserving first-appearance order.
std::vector<std::pair<std::string, std::vector<RegionPolygon>>> group_by_region(
    std::span<const RegionPolygon> parts);

}  // namespace tagmap
