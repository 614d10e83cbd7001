#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagmap/geo.hpp"

namespace tagmap {

class Manifest;

enum class Strategy { Systematic, Random };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

inline constexpr double kDefaultSpacingM = 102.0;

struct GridSpec {
  Strategy strategy = Strategy::Systematic;
  double spacing_m = kDefaultSpacingM;
  // Defaults to the bounding-box minimum corner when empty.
  std::optional<GeoPoint> anchor;
  std::uint64_t n_random = 0;
  std::uint64_t seed = 0;
};

// Stable identifier: latitude and longitude in units of 1e-7 degree, e.g.
// "-235424736_-466441269".
std::string make_point_id(const GeoPoint& p);

struct SamplePoint {
  explicit SamplePoint(GeoPoint loc) : point_id(make_point_id(loc)), location(loc) {}

  std::string point_id;
  GeoPoint location;
};

struct SamplePlan {
  GridSpec spec;
  std::string region_id;
  std::vector<SamplePoint> points;  // sorted by (lat, lon)
};

bool inside_any(const GeoPoint& p, std::span<const RegionPolygon> parts) noexcept;

// Fixed-step lattice over the region's bounding box, filtered to points inside
// any part. Throws EmptyRegion when nothing survives.
SamplePlan build_systematic_grid(std::span<const RegionPolygon> parts, const GridSpec& spec);
SamplePlan build_systematic_grid(const RegionPolygon& region, const GridSpec& spec);

// Uniform rejection sampling on the bounding box, seeded.
SamplePlan sample_random(std::span<const RegionPolygon> parts, const GridSpec& spec);
SamplePlan sample_random(const RegionPolygon& region, const GridSpec& spec);

// Keeps points whose `views_per_point` planned views all resolved to ok,
// first-party imagery in `manifest`. Order is preserved.
SamplePlan coverage_filter(const SamplePlan& plan, const Manifest& manifest, unsigned views_per_point);

// JSON Lines: header object, then one {point_id, lat, lon} per line.
std::string plan_to_jsonl(const SamplePlan& plan);
SamplePlan plan_from_jsonl(const std::string& text);
void save_plan(const SamplePlan& plan, const std::filesystem::path& path);
SamplePlan load_plan(const std::filesystem::path& path);

}  // namespace tagmap
