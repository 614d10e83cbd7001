#include "tagmap/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tagmap/acquisition.hpp"
#include "tagmap/error.hpp"
#include "tagmap/io.hpp"

namespace tagmap {

namespace {

// Rows/columns within this distance past the bounding box are kept.
constexpr double kInclusiveEpsDeg = 1e-9;
constexpr std::uint64_t kRejectionsPerPoint = 10000;

void sort_points(std::vector<SamplePoint>& points) {
  std::sort(points.begin(), points.end(), [](const SamplePoint& a, const SamplePoint& b) {
    if (a.location.lat() != b.location.lat()) return a.location.lat() < b.location.lat();
    return a.location.lon() < b.location.lon();
  });
}

// Integer lattice indices i with lo - eps <= origin + i * step <= hi + eps.
std::vector<double> lattice_axis(double origin, double step, double lo, double hi) {
  const long first = static_cast<long>(std::floor((lo - kInclusiveEpsDeg - origin) / step)) - 1;
  const long last = static_cast<long>(std::ceil((hi + kInclusiveEpsDeg - origin) / step)) + 1;
  std::vector<double> coords;
  for (long i = first; i <= last; ++i) {
    const double c = origin + static_cast<double>(i) * step;
    if (c >= lo - kInclusiveEpsDeg && c <= hi + kInclusiveEpsDeg) coords.push_back(c);
  }
  return coords;
}

}  // namespace

std::string_view to_string(Strategy s) {
  return s == Strategy::Systematic ? "systematic" : "random";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "systematic") return Strategy::Systematic;
  if (s == "random") return Strategy::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + std::string(s) + "'");
}

std::string make_point_id(const GeoPoint& p) {
  return fmt::format("{}_{}", std::llround(p.lat() * 1e7), std::llround(p.lon() * 1e7));
}

bool inside_any(const GeoPoint& p, std::span<const RegionPolygon> parts) noexcept {
  return std::any_of(parts.begin(), parts.end(),
                     [&](const RegionPolygon& poly) { return point_in_polygon(p, poly); });
}

SamplePlan build_systematic_grid(std::span<const RegionPolygon> parts, const GridSpec& spec) {
  if (spec.strategy != Strategy::Systematic) {
    throw Error(ErrorCode::InvalidArgument, "build_systematic_grid needs the systematic strategy");
  }
  const BoundingBox box = bbox_of(parts);
  const GeoPoint anchor = spec.anchor.value_or(GeoPoint(box.min_lat, box.min_lon));
  const DegreeSteps steps = local_degree_steps(GeoPoint(box.mid_lat(), anchor.lon()), spec.spacing_m);

  SamplePlan plan{spec, parts.front().region_id(), {}};
  plan.spec.anchor = anchor;
  const auto lats = lattice_axis(anchor.lat(), steps.dlat_deg, box.min_lat, box.max_lat);
  const auto lons = lattice_axis(anchor.lon(), steps.dlon_deg, box.min_lon, box.max_lon);
  for (double lat : lats) {
    if (lat < -90.0 || lat > 90.0) continue;
    for (double lon : lons) {
      if (lon < -180.0 || lon >= 180.0) continue;
      const GeoPoint p(lat, lon);
      if (inside_any(p, parts)) plan.points.emplace_back(p);
    }
  }
  if (plan.points.empty()) {
    throw Error(ErrorCode::EmptyRegion, "no lattice point inside region '" + plan.region_id + "'");
  }
  sort_points(plan.points);
  return plan;
}

SamplePlan build_systematic_grid(const RegionPolygon& region, const GridSpec& spec) {
  return build_systematic_grid(std::span<const RegionPolygon>(&region, 1), spec);
}

SamplePlan sample_random(std::span<const RegionPolygon> parts, const GridSpec& spec) {
  if (spec.strategy != Strategy::Random) {
    throw Error(ErrorCode::InvalidArgument, "sample_random needs the random strategy");
  }
  const BoundingBox box = bbox_of(parts);
  SamplePlan plan{spec, parts.front().region_id(), {}};
  plan.spec.anchor.reset();
  plan.points.reserve(spec.n_random);

  std::mt19937_64 rng(spec.seed);
  std::unordered_set<std::string> seen;
  const std::uint64_t max_rejections = kRejectionsPerPoint * spec.n_random;
  std::uint64_t rejections = 0;
  while (plan.points.size() < spec.n_random) {
    const double lat = box.min_lat + uniform01(rng) * (box.max_lat - box.min_lat);
    const double lon = box.min_lon + uniform01(rng) * (box.max_lon - box.min_lon);
    const GeoPoint p(lat, lon);
    if (inside_any(p, parts) && seen.insert(make_point_id(p)).second) {
      plan.points.emplace_back(p);
      rejections = 0;
    } else if (++rejections >= max_rejections) {
      throw Error(ErrorCode::RejectionOverflow,
                  fmt::format("{} consecutive rejections sampling '{}'", rejections, plan.region_id));
    }
  }
  sort_points(plan.points);
  return plan;
}

SamplePlan sample_random(const RegionPolygon& region, const GridSpec& spec) {
  return sample_random(std::span<const RegionPolygon>(&region, 1), spec);
}

SamplePlan coverage_filter(const SamplePlan& plan, const Manifest& manifest, unsigned views_per_point) {
  SamplePlan out{plan.spec, plan.region_id, {}};
  for (const auto& point : plan.points) {
    const auto views = plan_views(point, views_per_point);
    const bool covered = std::all_of(views.begin(), views.end(), [&](const ViewRequest& v) {
      const ImageRecord* rec = manifest.find(make_image_id(v.point_id, v.heading_deg));
      return rec != nullptr && rec->status == ImageStatus::Ok && rec->provider == ProviderKind::FirstParty;
    });
    if (covered) out.points.push_back(point);
  }
  return out;
}

std::string plan_to_jsonl(const SamplePlan& plan) {
  nlohmann::json header = {{"region_id", plan.region_id},
                           {"strategy", to_string(plan.spec.strategy)},
                           {"seed", plan.spec.seed}};
  if (plan.spec.strategy == Strategy::Systematic) {
    header["spacing_m"] = plan.spec.spacing_m;
  } else {
    header["n_random"] = plan.spec.n_random;
  }
  header["anchor"] = plan.spec.anchor
                         ? nlohmann::json{{"lat", plan.spec.anchor->lat()}, {"lon", plan.spec.anchor->lon()}}
                         : nlohmann::json(nullptr);
  std::string out = header.dump() + "\n";
  for (const auto& p : plan.points) {
    out += nlohmann::json{{"point_id", p.point_id}, {"lat", p.location.lat()}, {"lon", p.location.lon()}}.dump();
    out += "\n";
  }
  return out;
}

SamplePlan plan_from_jsonl(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::ParseError, "plan file is empty");
  try {
    const auto header = nlohmann::json::parse(lines[0]);
    SamplePlan plan;
    plan.region_id = header.at("region_id").get<std::string>();
    plan.spec.strategy = parse_strategy(header.value("strategy", std::string("systematic")));
    plan.spec.seed = header.value("seed", std::uint64_t{0});
    plan.spec.spacing_m = header.value("spacing_m", kDefaultSpacingM);
    plan.spec.n_random = header.value("n_random", std::uint64_t{0});
    if (header.contains("anchor") && !header["anchor"].is_null()) {
      plan.spec.anchor = GeoPoint(header["anchor"].at("lat").get<double>(), header["anchor"].at("lon").get<double>());
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto row = nlohmann::json::parse(lines[i]);
      SamplePoint point(GeoPoint(row.at("lat").get<double>(), row.at("lon").get<double>()));
      const auto id = row.at("point_id").get<std::string>();
      if (id != point.point_id) {
        throw Error(ErrorCode::ParseError, "point_id '" + id + "' does not match its coordinates");
      }
      plan.points.push_back(std::move(point));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("plan: ") + e.what());
  }
}

void save_plan(const SamplePlan& plan, const std::filesystem::path& path) {
  write_file_atomic(path, plan_to_jsonl(plan));
}

SamplePlan load_plan(const std::filesystem::path& path) { return plan_from_jsonl(read_file(path)); }

}  // namespace tagmap
