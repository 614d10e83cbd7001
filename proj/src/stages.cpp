#include "tagmap/stages.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <exception>
#include <map>
#include <memory>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tagmap/backends.hpp"
#include "tagmap/error.hpp"
#include "tagmap/io.hpp"
#include "tagmap/providers.hpp"
#include "tagmap/report.hpp"

namespace tagmap::stages {

namespace {

std::vector<RegionPolygon> load_region(const PipelineConfig& cfg) { return load_regions_geojson(cfg.path("region")); }

std::vector<RegionPolygon> load_scoring_regions(const PipelineConfig& cfg) {
  return load_regions_geojson(cfg.opt_str("regions") ? cfg.path("regions") : cfg.path("region"));
}

std::string plan_region_id(const std::vector<RegionPolygon>& parts) {
  const auto groups = group_by_region(parts);
  return groups.size() == 1 ? groups.front().first : "all";
}

SamplePlan relabel(SamplePlan plan, const std::vector<RegionPolygon>& parts) {
  plan.region_id = plan_region_id(parts);
  return plan;
}

ViewOptions view_options(const PipelineConfig& cfg) {
  return {cfg.num("fov_deg"), static_cast<unsigned>(cfg.uint("width_px")), static_cast<unsigned>(cfg.uint("height_px"))};
}

std::vector<RegionPolygon> optional_regions(const PipelineConfig& cfg, std::string_view key) {
  const auto p = cfg.opt_str(key);
  return p ? load_regions_geojson(*p) : std::vector<RegionPolygon>{};
}

std::unique_ptr<ProviderClient> make_provider(const PipelineConfig& cfg) {
  const auto kind = cfg.str("provider.kind");
  if (kind == "simulated") {
    SimulatedProviderConfig sim;
    sim.seed = cfg.uint("provider.seed");
    sim.external_fraction = cfg.num("provider.external_fraction");
    sim.unmapped_fraction = cfg.num("provider.unmapped_fraction");
    sim.external_zones = optional_regions(cfg, "provider.external_zones");
    sim.unmapped_zones = optional_regions(cfg, "provider.unmapped_zones");
    if (const auto dir = cfg.opt_str("provider.blob_dir")) sim.blob_dir = *dir;
    return std::make_unique<SimulatedProvider>(std::move(sim));
  }
  if (kind == "directory") return std::make_unique<DirectoryProvider>(cfg.path("provider.root"));
  HttpProviderOptions opts;
  opts.base_url = cfg.path("provider.base_url").string();
  opts.blob_dir = cfg.opt_str("provider.blob_dir").value_or("images");
  return std::make_unique<HttpProvider>(HttpProvider::from_env(std::move(opts)));
}

std::unique_ptr<DetectorBackend> make_backend(const PipelineConfig& cfg) {
  const auto kind = cfg.str("detector.kind");
  if (kind == "synthetic") {
    SyntheticBackendConfig sc;
    sc.seed = cfg.uint("detector.seed");
    sc.max_regions = static_cast<unsigned>(cfg.uint("detector.max_regions"));
    sc.tagged_fraction = cfg.num("detector.tagged_fraction");
    return std::make_unique<SyntheticBackend>(sc);
  }
  if (kind == "file") return std::make_unique<FileBackend>(cfg.path("detector.dir"));
  return std::make_unique<RemoteBackend>(cfg.path("detector.url").string());
}

LevelOptions level_options(const PipelineConfig& cfg) {
  return {parse_level_mode(cfg.str("mode")), parse_dedup(cfg.str("dedup")), cfg.num("tau")};
}

std::filesystem::path relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  return std::filesystem::absolute(p).lexically_normal().lexically_relative(
      std::filesystem::absolute(base).lexically_normal());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first error.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

SamplePlan run_grid(const PipelineConfig& cfg) {
  const auto parts = load_region(cfg);
  GridSpec spec;
  spec.strategy = Strategy::Systematic;
  spec.spacing_m = cfg.num("spacing_m");
  spec.seed = cfg.uint("seed");
  if (const auto& a = cfg.at("anchor"); !a.is_null()) {
    spec.anchor = GeoPoint(a.at("lat").get<double>(), a.at("lon").get<double>());
  }
  auto plan = relabel(build_systematic_grid(parts, spec), parts);
  save_plan(plan, cfg.path("out"));
  return plan;
}

SamplePlan run_sample(const PipelineConfig& cfg) {
  const auto parts = load_region(cfg);
  GridSpec spec;
  spec.strategy = Strategy::Random;
  spec.n_random = cfg.uint("n_random");
  spec.seed = cfg.uint("seed");
  auto plan = relabel(sample_random(parts, spec), parts);
  save_plan(plan, cfg.path("out"));
  return plan;
}

AcquireStats run_acquire(const PipelineConfig& cfg, Clock* clock) {
  const auto plan = load_plan(cfg.path("plan"));
  auto provider = make_provider(cfg);
  Manifest manifest = Manifest::open(cfg.path("manifest"));

  AcquireOptions opts;
  opts.k = static_cast<unsigned>(cfg.uint("k"));
  opts.view = view_options(cfg);
  opts.workers = static_cast<unsigned>(cfg.uint("provider.workers"));
  opts.clock = clock;
  const auto& rate = cfg.at("provider.rate_per_s");
  // Local sources are not throttled unless asked to be.
  opts.rate_per_s = rate.is_number() ? rate.get<double>() : (cfg.str("provider.kind") == "http" ? 10.0 : 0.0);
  return acquire(plan, *provider, manifest, opts);
}

std::size_t run_detect(const PipelineConfig& cfg) {
  const Manifest manifest = Manifest::parse(read_file(cfg.path("manifest")));
  const auto out_dir = cfg.path("detections");
  std::filesystem::create_directories(out_dir);
  auto backend = make_backend(cfg);

  std::vector<const ImageRecord*> images;
  for (const auto& r : manifest.records()) {
    if (r.status == ImageStatus::Ok) images.push_back(&r);
  }
  parallel_for(images.size(), static_cast<unsigned>(cfg.uint("detector.workers")), [&](std::size_t i) {
    const ImageRecord& r = *images[i];
    const ImageRef ref{r.image_id, r.storage_ref, {r.width_px, r.height_px}};
    DetectionSet set = backend->detect(ref);
    set.image_id = r.image_id;
    save_detection_set(set, out_dir);
  });
  return images.size();
}

ScoreOutputs compute_scores(const PipelineConfig& cfg) {
  ScoreOutputs out;
  const auto plan = load_plan(cfg.path("plan"));
  const Manifest manifest = Manifest::parse(read_file(cfg.path("manifest")));
  const unsigned k = static_cast<unsigned>(cfg.uint("k"));
  FileBackend detections(cfg.path("detections"));
  const LevelOptions opts = level_options(cfg);

  out.covered = coverage_filter(plan, manifest, k);
  out.levels.resize(out.covered.points.size());
  parallel_for(out.covered.points.size(), std::max(1u, std::thread::hardware_concurrency()), [&](std::size_t i) {
    const auto& point = out.covered.points[i];
    std::vector<ViewDetections> views;
    for (const auto& v : plan_views(point, k)) {
      const ImageRecord* rec = manifest.find(make_image_id(v.point_id, v.heading_deg));
      const ImageDims dims{rec->width_px, rec->height_px};
      views.push_back({detections.detect({rec->image_id, rec->storage_ref, dims}), dims});
    }
    out.levels[i] = location_level(point.point_id, views, opts);
  });
  out.regions = load_scoring_regions(cfg);
  out.scoring = score_by_region(out.regions, out.covered, out.levels);
  return out;
}

ScoreOutputs run_score(const PipelineConfig& cfg) {
  auto out = compute_scores(cfg);
  const auto dir = cfg.path("out");
  write_file_atomic(dir / "points.csv", levels_to_csv(out.levels));
  write_file_atomic(dir / "regions.csv", scores_to_csv(out.scoring.scores));
  return out;
}

Evaluation run_eval(const PipelineConfig& cfg) {
  const auto det_dir = cfg.path("detections");
  const auto truth_dir = cfg.path("truth");
  std::map<std::string, EvaluationImage> images;
  auto scan = [&](const std::filesystem::path& dir, bool truth) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "not a directory: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.path().extension() != ".json") continue;
      auto set = detection_set_from_json(read_file(entry.path()));
      auto& img = images[set.image_id];
      if (truth) {
        img.truths = truths_from_set(set);
      } else {
        img.detections = std::move(set);
      }
    }
  };
  scan(det_dir, false);
  scan(truth_dir, true);

  std::optional<Manifest> manifest;
  if (cfg.opt_str("manifest")) manifest = Manifest::parse(read_file(cfg.path("manifest")));
  std::vector<EvaluationImage> list;
  for (auto& [id, img] : images) {
    img.detections.image_id = id;
    const ImageRecord* rec = manifest ? manifest->find(id) : nullptr;
    if (rec && rec->width_px > 0) {
      img.dims = {rec->width_px, rec->height_px};
    } else {
      // Without a manifest, the canvas just needs to cover every polygon.
      double w = 1, h = 1;
      auto grow = [&](const PixelRing& ring) {
        for (const auto& p : ring) {
          w = std::max(w, p.x);
          h = std::max(h, p.y);
        }
      };
      for (const auto& r : img.detections.regions) grow(r.polygon);
      for (const auto& t : img.truths) grow(t.polygon);
      img.dims = {static_cast<unsigned>(std::ceil(w)), static_cast<unsigned>(std::ceil(h))};
    }
    list.push_back(std::move(img));
  }
  auto result = evaluate(list, cfg.num("iou_threshold"));
  const auto dir = cfg.path("out");
  write_file_atomic(dir / "pr_curve.csv", pr_curve_to_csv(result.curve));
  write_file_atomic(dir / "ap.json", ap_result_to_json(result.result));
  return result;
}

BiasVarianceReport run_simulate(const PipelineConfig& cfg) {
  const auto parts = load_region(cfg);
  const auto field = DensityField::random(cfg.uint("simulate.field_seed"), bbox_of(parts),
                                          static_cast<unsigned>(cfg.uint("simulate.bumps")),
                                          cfg.num("simulate.min_sigma_m"), cfg.num("simulate.max_sigma_m"));
  const auto runs = static_cast<std::size_t>(cfg.uint("simulate.runs"));
  const auto anchor_mode =
      cfg.str("simulate.anchor_mode") == "random_start" ? AnchorMode::RandomStart : AnchorMode::Corner;
  std::vector<EstimatorConfig> configs;
  for (const auto& s : cfg.at("simulate.spacings_m")) {
    configs.push_back({Strategy::Systematic, s.get<double>(),
                       anchor_mode == AnchorMode::Corner ? std::vector<std::uint64_t>{0} : seed_range(1, runs),
                       anchor_mode});
  }
  for (const auto& n : cfg.at("simulate.n_random")) {
    configs.push_back({Strategy::Random, n.get<double>(), seed_range(1, runs), AnchorMode::Corner});
  }
  auto report = bias_variance_report(field, parts, configs);
  const auto dir = cfg.path("out");
  write_file_atomic(dir / "simulate.csv", report_to_csv(report));
  write_file_atomic(dir / "error_chart.svg", error_chart_svg(report));
  return report;
}

const std::vector<std::string>& report_bundle_files() {
  static const std::vector<std::string> files = {"regions.geojson", "points.csv",    "regions.csv",
                                                 "years.csv",       "choropleth.svg", "metadata.json"};
  return files;
}

ScoreOutputs run_report(const PipelineConfig& cfg) {
  auto out = compute_scores(cfg);
  const auto dir = cfg.path("out");
  const auto manifest_path = cfg.path("manifest");
  const std::string manifest_bytes = read_file(manifest_path);
  const Manifest manifest = Manifest::parse(manifest_bytes);

  write_file_atomic(dir / "regions.geojson", scores_to_geojson(out.scoring.scores, out.regions));
  write_file_atomic(dir / "points.csv", levels_to_csv(out.levels));
  write_file_atomic(dir / "regions.csv", scores_to_csv(out.scoring.scores));
  write_file_atomic(dir / "years.csv", histogram_to_csv(year_histogram(manifest)));
  if (!out.scoring.scores.empty()) {
    write_file_atomic(dir / "choropleth.svg", emit_choropleth(out.scoring.scores, out.regions));
  }

  const nlohmann::json meta = {
      {"tool_version", kToolVersion},
      {"config_hash", cfg.hash()},
      {"created_at", utc_timestamp()},
      {"manifest", {{"path", relative_to(manifest_path, dir).generic_string()}, {"sha256", sha256_hex(manifest_bytes)}}},
      {"plan", {{"path", relative_to(cfg.path("plan"), dir).generic_string()},
                {"sha256", sha256_hex(read_file(cfg.path("plan")))}}},
      {"points_total", out.covered.points.size()},
      {"unassigned_points", out.scoring.unassigned},
      {"no_data_regions", out.scoring.no_data},
      {"level_mode", to_string(parse_level_mode(cfg.str("mode")))},
      {"dedup", to_string(parse_dedup(cfg.str("dedup")))},
      {"tau", cfg.num("tau")},
  };
  write_file_atomic(dir / "metadata.json", meta.dump(2) + "\n");
  return out;
}

std::filesystem::path run_demo(const std::filesystem::path& area, const std::filesystem::path& districts,
                               const std::filesystem::path& workdir) {
  std::filesystem::create_directories(workdir);
  PipelineConfig cfg;
  cfg.set_value("region", area.string());
  cfg.set_value("regions", districts.string());
  cfg.set_value("plan", (workdir / "plan.jsonl").string());
  cfg.set_value("manifest", (workdir / "manifest.jsonl").string());
  cfg.set_value("detections", (workdir / "detections").string());
  cfg.set_value("provider.seed", 7);
  cfg.set_value("provider.blob_dir", (workdir / "images").string());
  cfg.set_value("detector.seed", 11);
  cfg.validate();

  PipelineConfig grid = cfg;
  grid.set_value("out", (workdir / "plan.jsonl").string());
  run_grid(grid);
  run_acquire(cfg);
  run_detect(cfg);
  PipelineConfig report = cfg;
  report.set_value("out", (workdir / "report").string());
  run_report(report);
  return workdir / "report";
}

}  // namespace tagmap::stages
