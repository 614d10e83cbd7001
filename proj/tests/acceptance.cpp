// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tagmap/acquisition.hpp"
#include "tagmap/backends.hpp"
#include "tagmap/evaluation.hpp"
#include "tagmap/io.hpp"
#include "tagmap/metrics.hpp"
#include "tagmap/providers.hpp"
#include "tagmap/sampling.hpp"
#include "tagmap/stages.hpp"
#include "tagmap/survey_sim.hpp"

namespace fs = std::filesystem;
using namespace tagmap;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double max_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (max_seconds > 0 && secs >= max_seconds) {
    out.ok = false;
    out.detail += fmt::format("; too slow ({:.2f}s >= {}s)", secs, max_seconds);
  }
  if (!out.ok) ++failures;
  fmt::print("{} {} [{:.2f}s] {}\n", out.ok ? "PASS" : "FAIL", name, secs, out.detail);
  std::fflush(stdout);
}

RegionPolygon rectangle(const std::string& id, double lat0, double lon0, double lat1, double lon1) {
  return RegionPolygon(id, {{lat0, lon0}, {lat0, lon1}, {lat1, lon1}, {lat1, lon0}});
}

// Square of side `side_m` with its south-west corner at (lat0, lon0); the
// east-west extent is measured at the square's mid-latitude.
RegionPolygon square_m(double lat0, double lon0, double side_m) {
  const double dlat = side_m / kMetersPerDegree;
  const double mid = lat0 + dlat / 2;
  const double dlon = side_m / (kMetersPerDegree * std::cos(mid * kPi / 180.0));
  return rectangle("square", lat0, lon0, lat0 + dlat, lon0 + dlon);
}

Outcome region_mean_oracle() {
  std::mt19937_64 rng(20240601);
  double worst = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t n = 1 + rng() % 400;
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-4, 2)(rng));
    std::vector<LocationLevel> levels;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = uniform01(rng) * scale;
      levels.push_back({fmt::format("p{}", i), v, 4});
      values.push_back(v);
    }
    const auto score = region_score("r", levels);
    if (score.n != n) return {false, fmt::format("instance {}: n = {} expected {}", inst, score.n, n)};
    worst = std::max(worst, std::abs(score.mean_level - oracle::plain_mean(values)));
  }
  return {worst <= 1e-12, fmt::format("1000 instances, max |diff| = {:.3g}", worst)};
}

Outcome grid_geometry() {
  const auto region = square_m(-23.5 - 0.045, -46.7, 10000.0);
  GridSpec spec;
  spec.spacing_m = 102.0;
  const auto plan = build_systematic_grid(region, spec);
  const std::size_t side = static_cast<std::size_t>(std::floor(10000.0 / 102.0)) + 1;
  const std::size_t expected = side * side;

  // Points come sorted by (lat, lon): neighbours along a row are adjacent,
  // neighbours along a column are `side` apart.
  double worst = 0;
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    const auto& p = plan.points[i].location;
    if ((i + 1) % side != 0 && i + 1 < plan.points.size()) {
      worst = std::max(worst, std::abs(haversine_m(p, plan.points[i + 1].location) / 102.0 - 1.0));
    }
    if (i + side < plan.points.size()) {
      worst = std::max(worst, std::abs(haversine_m(p, plan.points[i + side].location) / 102.0 - 1.0));
    }
  }
  const bool ok = plan.points.size() == expected && worst <= 0.005;
  return {ok, fmt::format("{} points (expected {}), worst spacing deviation {:.4f}%", plan.points.size(), expected,
                          worst * 100)};
}

Outcome year_table() {
  Manifest manifest;
  std::uint64_t serial = 0;
  for (const auto& [year, count] : reference_year_counts()) {
    for (std::uint64_t i = 0; i < count; ++i) {
      ImageRecord r;
      r.image_id = fmt::format("img{}", serial);
      r.point_id = fmt::format("pt{}", serial++);
      r.capture_year = year;
      r.width_px = r.height_px = 640;
      r.storage_ref = "x";
      r.status = ImageStatus::Ok;
      manifest.append(std::move(r));
    }
  }
  const auto h = year_histogram(manifest);
  const std::map<int, std::uint64_t> table = {{2010, 1241}, {2011, 16311}, {2012, 207},  {2013, 422},  {2014, 2182},
                                              {2015, 4563}, {2016, 4211},  {2017, 39391}, {2018, 317}};
  if (h.years != table || h.unknown != 0) return {false, "bucket mismatch"};
  const double pct = std::round(h.share(2017) * 1000.0) / 10.0;
  return {pct == 57.2, fmt::format("all 9 buckets exact, total {}, 2017 share {:.1f}%", h.total(), pct)};
}

Outcome voc_ap() {
  std::mt19937_64 rng(77);
  constexpr int W = 48;
  constexpr int H = 40;
  double worst = 0;
  for (int corpus = 0; corpus < 200; ++corpus) {
    const int n_images = 1 + static_cast<int>(rng() % 10);
    std::vector<EvaluationImage> images;
    std::vector<double> all_conf;
    std::vector<bool> all_tp;
    std::size_t n_gt = 0;
    for (int i = 0; i < n_images; ++i) {
      EvaluationImage img;
      img.dims = {W, H};
      img.detections.image_id = fmt::format("im{}", i);
      const int ng = static_cast<int>(rng() % 4);
      const int nd = static_cast<int>(rng() % 5);
      for (int g = 0; g < ng; ++g) img.truths.push_back({img.detections.image_id, oracle::random_quad(rng, W, H)});
      std::vector<double> conf;
      for (int d = 0; d < nd; ++d) {
        DetectionRegion r;
        // Half of the detections are perturbed copies of a truth, so matches happen.
        if (ng > 0 && rng() % 2 == 0) {
          r.polygon = img.truths[rng() % ng].polygon;
          const double dx = static_cast<double>(rng() % 3);
          for (auto& p : r.polygon) p.x = std::min<double>(W, p.x + dx);
        } else {
          r.polygon = oracle::random_quad(rng, W, H);
        }
        r.confidence = static_cast<double>(rng() % 6) / 5.0;  // coarse, so ties occur
        conf.push_back(r.confidence);
        img.detections.regions.push_back(std::move(r));
      }
      std::vector<std::vector<double>> m(nd, std::vector<double>(ng));
      for (int d = 0; d < nd; ++d) {
        for (int g = 0; g < ng; ++g) {
          m[d][g] = oracle::pixel_iou(img.detections.regions[d].polygon, img.truths[g].polygon, W, H);
        }
      }
      const auto tp = oracle::greedy(conf, m, ng, 0.5);
      all_conf.insert(all_conf.end(), conf.begin(), conf.end());
      all_tp.insert(all_tp.end(), tp.begin(), tp.end());
      n_gt += ng;
      images.push_back(std::move(img));
    }
    const double got = evaluate(images, 0.5).result.ap;
    worst = std::max(worst, std::abs(got - oracle::ap_11pt(all_conf, all_tp, n_gt)));
  }

  // Perfect detector: the synthetic backend scored against its own truth.
  SyntheticBackend backend({.seed = 5});
  std::vector<EvaluationImage> perfect, blind;
  for (int i = 0; i < 10; ++i) {
    const ImageRef ref{fmt::format("syn{}", i), "", {640, 640}};
    EvaluationImage img{backend.detect(ref), backend.ground_truth(ref), ref.dims};
    EvaluationImage off = img;
    // Zero-TP detector: the same shapes moved to where no truth is.
    for (auto& r : off.detections.regions) r.polygon = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
    off.truths.clear();
    for (auto& r : img.detections.regions) {
      off.truths.push_back({ref.image_id, {{600, 600}, {640, 600}, {640, 640}, {600, 640}}});
    }
    perfect.push_back(std::move(img));
    blind.push_back(std::move(off));
  }
  const auto p = evaluate(perfect, 0.5).result;
  const auto z = evaluate(blind, 0.5).result;
  const bool ok = worst <= 1e-9 && p.ap == 1.0 && p.n_gt > 0 && z.ap == 0.0 && z.n_det > 0;
  return {ok, fmt::format("200 corpora max |diff| = {:.3g}; perfect AP = {} ({} truths); zero-TP AP = {}", worst, p.ap,
                          p.n_gt, z.ap)};
}

Outcome greedy_matching() {
  std::mt19937_64 rng(4242);
  constexpr int W = 40;
  constexpr int H = 32;
  for (int inst = 0; inst < 500; ++inst) {
    DetectionSet dets;
    dets.image_id = "x";
    std::vector<GroundTruthRegion> truths;
    const int ng = static_cast<int>(rng() % 6);
    const int nd = static_cast<int>(rng() % 6);
    for (int g = 0; g < ng; ++g) truths.push_back({"x", oracle::random_quad(rng, W, H)});
    std::vector<double> conf;
    for (int d = 0; d < nd; ++d) {
      DetectionRegion r;
      r.polygon = (ng > 0 && rng() % 3 != 0) ? truths[rng() % ng].polygon : oracle::random_quad(rng, W, H);
      if (rng() % 2) {
        for (auto& p : r.polygon) p.y = std::min<double>(H, p.y + static_cast<double>(rng() % 4));
      }
      r.confidence = static_cast<double>(rng() % 4) / 3.0;
      conf.push_back(r.confidence);
      dets.regions.push_back(std::move(r));
    }
    std::vector<std::vector<double>> m(nd, std::vector<double>(ng));
    for (int d = 0; d < nd; ++d) {
      for (int g = 0; g < ng; ++g) m[d][g] = oracle::pixel_iou(dets.regions[d].polygon, truths[g].polygon, W, H);
    }
    const auto want = oracle::greedy(conf, m, ng, 0.5);
    const auto got = match_detections(dets, truths, {W, H}, 0.5);
    if (got != want) return {false, fmt::format("instance {} differs", inst)};
  }
  return {true, "500 instances identical"};
}

Outcome sampling_simulator() {
  const auto region = square_m(-23.6, -46.75, 10000.0);
  const std::vector<RegionPolygon> parts = {region};
  const auto field = DensityField::random(3, region.bbox(), 2, 600.0, 1500.0);
  const auto seeds = seed_range(1, 200);
  const std::vector<EstimatorConfig> configs = {
      {Strategy::Random, 500, seeds, AnchorMode::Corner},
      {Strategy::Systematic, 400, seeds, AnchorMode::RandomStart},
      {Strategy::Systematic, 200, seeds, AnchorMode::RandomStart},
      {Strategy::Systematic, 100, seeds, AnchorMode::RandomStart},
  };
  const auto report = bias_variance_report(field, parts, configs);
  const auto& rnd = report.rows[0];
  const double bound = 3.0 * rnd.std_error / std::sqrt(static_cast<double>(rnd.runs));
  const bool unbiased = std::abs(rnd.mean_error) < bound;
  const double e1 = report.rows[1].mean_abs_error;
  const double e2 = report.rows[2].mean_abs_error;
  const double e3 = report.rows[3].mean_abs_error;
  const bool refines = e2 <= 1.1 * e1 && e3 <= 1.1 * e2;
  return {unbiased && refines,
          fmt::format("true mean {:.6g}; random n=500 bias {:+.3g} (3σ bound {:.3g}); systematic mean|err| "
                      "400m {:.3g}, 200m {:.3g}, 100m {:.3g}",
                      report.true_mean, rnd.mean_error, bound, e1, e2, e3)};
}

Outcome union_and_iou() {
  const PixelRing a = {{0, 0}, {100, 0}, {100, 100}, {0, 100}};
  const PixelRing b = {{50, 0}, {150, 0}, {150, 100}, {50, 100}};
  const std::vector<DetectionRegion> regions = {{a, 1.0, kGraffitiLabel}, {b, 1.0, kGraffitiLabel}};
  const ImageDims dims{200, 120};
  const double u = union_area_px(regions, dims);
  const double j = iou(a, b, dims);
  const bool ok = std::abs(u - 15000.0) <= 0.02 * 15000.0 && std::abs(j - 1.0 / 3.0) <= 0.02;
  return {ok, fmt::format("union {} px², IoU {:.6f}", u, j)};
}

Outcome demo_determinism() {
  const fs::path data = TAGMAP_DATA_DIR;
  const fs::path work = fs::temp_directory_path() / "tagmap_acceptance_demo";
  auto run_once = [&] {
    fs::remove_all(work);
    const auto report = stages::run_demo(data / "area.geojson", data / "districts.geojson", work);
    std::map<std::string, std::string> files;
    for (const auto& name : stages::report_bundle_files()) {
      std::string bytes = read_file(report / name);
      if (name == "metadata.json") {
        auto meta = nlohmann::json::parse(bytes);
        meta.erase("created_at");
        bytes = meta.dump();
      }
      files[name] = std::move(bytes);
    }
    const auto plan = load_plan(work / "plan.jsonl");
    const auto manifest = Manifest::parse(read_file(work / "manifest.jsonl"));
    return std::tuple{files, plan.points.size(), manifest.size()};
  };
  const auto [first, points, records] = run_once();
  const auto [second, points2, records2] = run_once();
  fs::remove_all(work);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : first) differing += second.at(name) != bytes;
  const bool ok = differing == 0 && points == 100 && records == 400 && points2 == points && records2 == records;
  return {ok, fmt::format("{} points, {} images, {} of {} bundle files differ", points, records, differing,
                          first.size())};
}

Outcome coverage_fixture() {
  SamplePlan plan;
  for (double lat : {-23.550, -23.551, -23.552}) plan.points.emplace_back(GeoPoint(lat, -46.63));
  Manifest manifest;
  auto add = [&](const SamplePoint& p, double heading, ProviderKind provider) {
    ImageRecord r;
    r.image_id = make_image_id(p.point_id, heading);
    r.point_id = p.point_id;
    r.heading_deg = heading;
    r.provider = provider;
    r.width_px = r.height_px = 640;
    r.storage_ref = "sim://" + r.image_id;
    r.status = ImageStatus::Ok;
    manifest.append(r);
  };
  for (double h : {0.0, 90.0, 180.0, 270.0}) add(plan.points[0], h, ProviderKind::FirstParty);
  for (double h : {0.0, 90.0, 180.0}) add(plan.points[1], h, ProviderKind::FirstParty);
  add(plan.points[1], 270.0, ProviderKind::External);
  const auto kept = coverage_filter(plan, manifest, 4);
  const bool ok = kept.points.size() == 1 && kept.points[0].point_id == plan.points[0].point_id;
  return {ok, fmt::format("{} of 3 points kept", kept.points.size())};
}

}  // namespace

int main() {
  criterion("region-score-oracle", 1.0, region_mean_oracle);
  criterion("grid-geometry-102m", 5.0, grid_geometry);
  criterion("capture-year-table", 1.0, year_table);
  criterion("voc-ap-11pt", 0, voc_ap);
  criterion("greedy-matching", 0, greedy_matching);
  criterion("sampling-simulator", 60.0, sampling_simulator);
  criterion("union-area-and-iou", 0, union_and_iou);
  criterion("demo-determinism", 120.0, demo_determinism);
  criterion("coverage-filter-fixture", 0, coverage_fixture);
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
