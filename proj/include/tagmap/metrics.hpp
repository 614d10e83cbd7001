#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagmap/detection.hpp"
#include "tagmap/geo.hpp"
#include "tagmap/sampling.hpp"

namespace tagmap {

enum class LevelMode { Fraction, RawPx };
enum class Dedup { Union, RawSum };

std::string_view to_string(LevelMode m);
std::string_view to_string(Dedup d);
LevelMode parse_level_mode(std::string_view s);
Dedup parse_dedup(std::string_view s);

struct LevelOptions {
  LevelMode mode = LevelMode::Fraction;
  Dedup dedup = Dedup::Union;
  double tau = kDefaultTau;
};

// Detections for one view of a location, with the view's image size when known.
struct ViewDetections {
  DetectionSet set;
  std::optional<ImageDims> dims;
};

// Graffiti level of one location: tagged area summed over its views.
struct LocationLevel {
  std::string point_id;
  double level = 0.0;
  unsigned views_counted = 0;
};

struct RegionScore {
  std::string region_id;
  std::uint64_t n = 0;
  double mean_level = 0.0;
};

struct YearHistogram {
  std::map<int, std::uint64_t> years;
  std::uint64_t unknown = 0;

  void add(std::optional<int> year, std::uint64_t count = 1);
  std::uint64_t total() const noexcept;
  // Fraction of all records in `year`; 0 for an empty histogram.
  double share(int year) const noexcept;
  friend bool operator==(const YearHistogram&, const YearHistogram&) = default;
};

// Per-view tagged area (union or raw sum of regions passing tau), divided by
// the view's pixel count in fraction mode, summed over views. Throws
// MissingDims in fraction mode when a view has no dimensions.
LocationLevel location_level(std::string_view point_id, std::span<const ViewDetections> views,
                             const LevelOptions& opts = {});

// Mean level over the sampled locations. Throws EmptyRegion on no input.
// The sum is order-independent.
RegionScore region_score(std::string_view region_id, std::span<const LocationLevel> levels);

struct RegionScoring {
  std::vector<RegionScore> scores;      // sorted by region_id
  std::vector<std::string> no_data;     // regions with no located level, sorted
  std::uint64_t unassigned = 0;         // levels outside every region
};

// Assigns each level (via the plan's point locations) to the unique region
// containing it. Parts sharing a region_id form one region. Throws
// OverlappingRegions when a location lies in two distinct regions.
RegionScoring score_by_region(std::span<const RegionPolygon> parts, const SamplePlan& plan,
                              std::span<const LocationLevel> levels);

std::string levels_to_csv(std::span<const LocationLevel> levels);
std::string scores_to_csv(std::span<const RegionScore> scores);
std::string histogram_to_csv(const YearHistogram& h);

}  // namespace tagmap
