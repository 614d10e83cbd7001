#include "tagmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "tagmap/error.hpp"

namespace tagmap {

std::string_view to_string(LevelMode m) { return m == LevelMode::Fraction ? "fraction" : "raw_px"; }
std::string_view to_string(Dedup d) { return d == Dedup::Union ? "union" : "raw_sum"; }

LevelMode parse_level_mode(std::string_view s) {
  if (s == "fraction") return LevelMode::Fraction;
  if (s == "raw_px" || s == "raw") return LevelMode::RawPx;
  throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

Dedup parse_dedup(std::string_view s) {
  if (s == "union") return Dedup::Union;
  if (s == "raw_sum") return Dedup::RawSum;
  throw Error(ErrorCode::InvalidArgument, "unknown dedup '" + std::string(s) + "'");
}

void YearHistogram::add(std::optional<int> year, std::uint64_t count) {
  if (year) {
    years[*year] += count;
  } else {
    unknown += count;
  }
}

std::uint64_t YearHistogram::total() const noexcept {
  std::uint64_t t = unknown;
  for (const auto& [_, c] : years) t += c;
  return t;
}

double YearHistogram::share(int year) const noexcept {
  const auto t = total();
  const auto it = years.find(year);
  if (t == 0 || it == years.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(t);
}

namespace {

// Canvas for union rasterization when a raw-pixel view has no known size.
ImageDims covering_dims(std::span<const DetectionRegion> regions) {
  double w = 0.0;
  double h = 0.0;
  for (const auto& r : regions) {
    for (const auto& p : r.polygon) {
      w = std::max(w, p.x);
      h = std::max(h, p.y);
    }
  }
  return {static_cast<unsigned>(std::ceil(w)), static_cast<unsigned>(std::ceil(h))};
}

// Neumaier-compensated sum over a value-sorted copy, so the result does not
// depend on input order.
double stable_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

LocationLevel location_level(std::string_view point_id, std::span<const ViewDetections> views,
                             const LevelOptions& opts) {
  LocationLevel out{std::string(point_id), 0.0, 0};
  for (const auto& view : views) {
    if (opts.mode == LevelMode::Fraction && (!view.dims || view.dims->area() == 0)) {
      throw Error(ErrorCode::MissingDims, "view " + view.set.image_id + " has no image dimensions");
    }
    const DetectionSet kept = filter_by_confidence(view.set, opts.tau);
    double area = 0.0;
    if (opts.dedup == Dedup::Union) {
      area = union_area_px(kept.regions, view.dims.value_or(covering_dims(kept.regions)));
    } else {
      for (const auto& r : kept.regions) area += polygon_area_px(r);
    }
    if (opts.mode == LevelMode::Fraction) area /= static_cast<double>(view.dims->area());
    out.level += area;
    ++out.views_counted;
  }
  return out;
}

RegionScore region_score(std::string_view region_id, std::span<const LocationLevel> levels) {
  if (levels.empty()) {
    throw Error(ErrorCode::EmptyRegion, "region '" + std::string(region_id) + "' has no sampled locations");
  }
  std::vector<double> values;
  values.reserve(levels.size());
  for (const auto& l : levels) values.push_back(l.level);
  const auto n = static_cast<std::uint64_t>(levels.size());
  return {std::string(region_id), n, stable_sum(std::move(values)) / static_cast<double>(n)};
}

RegionScoring score_by_region(std::span<const RegionPolygon> parts, const SamplePlan& plan,
                              std::span<const LocationLevel> levels) {
  std::unordered_map<std::string, const GeoPoint*> where;
  for (const auto& p : plan.points) where.emplace(p.point_id, &p.location);

  const auto groups = group_by_region(parts);
  std::vector<std::vector<LocationLevel>> assigned(groups.size());
  RegionScoring out;
  for (const auto& level : levels) {
    const auto it = where.find(level.point_id);
    if (it == where.end()) {
      ++out.unassigned;
      continue;
    }
    std::optional<std::size_t> owner;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (!inside_any(*it->second, groups[g].second)) continue;
      if (owner) {
        throw Error(ErrorCode::OverlappingRegions, "point " + level.point_id + " lies in '" +
                                                       groups[*owner].first + "' and '" + groups[g].first + "'");
      }
      owner = g;
    }
    if (owner) {
      assigned[*owner].push_back(level);
    } else {
      ++out.unassigned;
    }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (assigned[g].empty()) {
      out.no_data.push_back(groups[g].first);
    } else {
      out.scores.push_back(region_score(groups[g].first, assigned[g]));
    }
  }
  std::sort(out.scores.begin(), out.scores.end(),
            [](const RegionScore& a, const RegionScore& b) { return a.region_id < b.region_id; });
  std::sort(out.no_data.begin(), out.no_data.end());
  return out;
}

std::string levels_to_csv(std::span<const LocationLevel> levels) {
  std::string out = "point_id,n,level\n";
  for (const auto& l : levels) out += fmt::format("{},{},{}\n", l.point_id, l.views_counted, l.level);
  return out;
}

std::string scores_to_csv(std::span<const RegionScore> scores) {
  std::string out = "region_id,n,mean_level\n";
  for (const auto& s : scores) out += fmt::format("{},{},{}\n", s.region_id, s.n, s.mean_level);
  return out;
}

std::string histogram_to_csv(const YearHistogram& h) {
  std::string out = "year,count\n";
  for (const auto& [year, count] : h.years) out += fmt::format("{},{}\n", year, count);
  if (h.unknown > 0) out += fmt::format("unknown,{}\n", h.unknown);
  return out;
}

}  // namespace tagmap
