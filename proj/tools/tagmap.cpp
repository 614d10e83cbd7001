// tagmap command-line front end. Every flag maps onto a config key, so
// `--spacing-m 50` and `--set spacing_m=50` are equivalent; explicit flags
// win over --set, which wins over --config.

#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tagmap/error.hpp"
#include "tagmap/stages.hpp"

namespace {

using nlohmann::json;
using namespace tagmap;

struct Layers {
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, json>> flags;

  PipelineConfig build() const {
    PipelineConfig cfg;
    if (!config_file.empty()) cfg.merge_file(config_file);
    for (const auto& s : sets) cfg.set(s);
    for (const auto& [key, value] : flags) cfg.set_value(key, value);
    cfg.validate();
    return cfg;
  }
};

template <typename T>
void flag(CLI::App* app, Layers& layers, const std::string& name, const std::string& key, const std::string& help) {
  app->add_option_function<T>(name, [&layers, key](const T& v) { layers.flags.emplace_back(key, json(v)); }, help);
}

void path_flag(CLI::App* app, Layers& layers, const std::string& name, const std::string& key,
               const std::string& help) {
  flag<std::string>(app, layers, name, key, help);
}

void common(CLI::App* app, Layers& layers) {
  app->add_option("--config", layers.config_file, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--set", layers.sets, "override a config key: key=value (repeatable)");
}

void anchor_flag(CLI::App* app, Layers& layers) {
  app->add_option_function<std::vector<double>>(
         "--anchor", [&layers](const std::vector<double>& v) {
           layers.flags.emplace_back("anchor", json{{"lat", v[0]}, {"lon", v[1]}});
         },
         "lattice anchor as LAT LON")
      ->expected(2);
}

void scoring_flags(CLI::App* app, Layers& layers) {
  path_flag(app, layers, "--plan", "plan", "sample plan (JSONL)");
  path_flag(app, layers, "--manifest", "manifest", "image manifest (JSONL)");
  path_flag(app, layers, "--detections", "detections", "detections directory");
  path_flag(app, layers, "--regions", "regions", "scoring regions (GeoJSON); defaults to --region");
  path_flag(app, layers, "--region", "region", "survey region (GeoJSON)");
  flag<unsigned>(app, layers, "--k", "k", "views per point");
  flag<std::string>(app, layers, "--mode", "mode", "level mode: fraction|raw_px");
  flag<double>(app, layers, "--tau", "tau", "confidence threshold");
  flag<std::string>(app, layers, "--dedup", "dedup", "overlap handling: union|raw_sum");
  path_flag(app, layers, "--out", "out", "output directory");
}

int run(int argc, char** argv) {
  CLI::App app{"Street-level graffiti survey pipeline"};
  app.require_subcommand(1);
  Layers layers;

  auto* grid = app.add_subcommand("grid", "systematic sample plan over a region");
  common(grid, layers);
  path_flag(grid, layers, "--region", "region", "survey region (GeoJSON)");
  flag<double>(grid, layers, "--spacing-m", "spacing_m", "grid spacing in metres");
  anchor_flag(grid, layers);
  path_flag(grid, layers, "--out", "out", "plan output (JSONL)");

  auto* sample = app.add_subcommand("sample", "uniform random sample plan over a region");
  common(sample, layers);
  path_flag(sample, layers, "--region", "region", "survey region (GeoJSON)");
  flag<std::uint64_t>(sample, layers, "--n", "n_random", "number of points");
  flag<std::uint64_t>(sample, layers, "--seed", "seed", "random seed");
  path_flag(sample, layers, "--out", "out", "plan output (JSONL)");

  auto* acq = app.add_subcommand("acquire", "fetch k views per planned point into the manifest");
  common(acq, layers);
  path_flag(acq, layers, "--plan", "plan", "sample plan (JSONL)");
  path_flag(acq, layers, "--manifest", "manifest", "image manifest (JSONL, appended)");
  flag<unsigned>(acq, layers, "--k", "k", "views per point");
  flag<double>(acq, layers, "--fov", "fov_deg", "field of view in degrees");
  flag<std::string>(acq, layers, "--provider", "provider.kind", "simulated|directory|http");
  path_flag(acq, layers, "--provider-root", "provider.root", "image directory for the directory provider");
  flag<std::string>(acq, layers, "--base-url", "provider.base_url", "provider URL for the http provider");
  path_flag(acq, layers, "--blob-dir", "provider.blob_dir", "where fetched images are stored");
  flag<double>(acq, layers, "--rate", "provider.rate_per_s", "request rate limit (req/s)");
  flag<unsigned>(acq, layers, "--workers", "provider.workers", "concurrent requests");

  auto* det = app.add_subcommand("detect", "run the detector over every fetched image");
  common(det, layers);
  path_flag(det, layers, "--manifest", "manifest", "image manifest (JSONL)");
  path_flag(det, layers, "--detections", "detections", "detections output directory");
  flag<std::string>(det, layers, "--backend", "detector.kind", "synthetic|file|remote");
  path_flag(det, layers, "--backend-dir", "detector.dir", "precomputed detections for the file backend");
  flag<std::string>(det, layers, "--url", "detector.url", "detector service URL for the remote backend");
  flag<std::uint64_t>(det, layers, "--seed", "detector.seed", "synthetic detector seed");

  auto* score = app.add_subcommand("score", "per-location levels and per-region scores");
  common(score, layers);
  scoring_flags(score, layers);

  auto* eval = app.add_subcommand("eval", "VOC average precision against ground truth");
  common(eval, layers);
  path_flag(eval, layers, "--detections", "detections", "detections directory");
  path_flag(eval, layers, "--truth", "truth", "ground-truth directory");
  path_flag(eval, layers, "--manifest", "manifest", "image manifest for image sizes (optional)");
  flag<double>(eval, layers, "--iou", "iou_threshold", "IoU threshold for a match");
  path_flag(eval, layers, "--out", "out", "output directory");

  auto* sim = app.add_subcommand("simulate", "compare sampling strategies on a synthetic field");
  common(sim, layers);
  path_flag(sim, layers, "--region", "region", "survey region (GeoJSON)");
  flag<std::uint64_t>(sim, layers, "--runs", "simulate.runs", "seeds per random configuration");
  flag<std::uint64_t>(sim, layers, "--field-seed", "simulate.field_seed", "density field seed");
  flag<std::string>(sim, layers, "--anchor-mode", "simulate.anchor_mode", "corner|random_start");
  path_flag(sim, layers, "--out", "out", "output directory");

  auto* rep = app.add_subcommand("report", "write the full report bundle");
  common(rep, layers);
  scoring_flags(rep, layers);

  std::string area, districts, workdir;
  auto* demo = app.add_subcommand("demo", "run the whole pipeline on simulated data");
  demo->add_option("--area", area, "survey region (GeoJSON)")->required()->check(CLI::ExistingFile);
  demo->add_option("--districts", districts, "scoring regions (GeoJSON)")->required()->check(CLI::ExistingFile);
  demo->add_option("--workdir", workdir, "working directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (demo->parsed()) {
    const auto dir = stages::run_demo(area, districts, workdir);
    fmt::print("report written to {}\n", dir.string());
    return 0;
  }

  const PipelineConfig cfg = layers.build();
  if (grid->parsed()) {
    const auto plan = stages::run_grid(cfg);
    fmt::print("{} points -> {}\n", plan.points.size(), cfg.path("out").string());
  } else if (sample->parsed()) {
    const auto plan = stages::run_sample(cfg);
    fmt::print("{} points -> {}\n", plan.points.size(), cfg.path("out").string());
  } else if (acq->parsed()) {
    const auto s = stages::run_acquire(cfg);
    fmt::print("fetched {}, reused {}, failed {}, provider calls {}\n", s.fetched, s.reused, s.failed,
               s.client_calls);
  } else if (det->parsed()) {
    fmt::print("{} images processed\n", stages::run_detect(cfg));
  } else if (score->parsed()) {
    const auto out = stages::run_score(cfg);
    fmt::print("{} locations, {} regions scored, {} without data, {} points outside all regions\n",
               out.levels.size(), out.scoring.scores.size(), out.scoring.no_data.size(), out.scoring.unassigned);
  } else if (eval->parsed()) {
    const auto e = stages::run_eval(cfg);
    fmt::print("AP@{} = {:.6f} ({} ground truth, {} detections)\n", e.result.iou_threshold, e.result.ap,
               e.result.n_gt, e.result.n_det);
  } else if (sim->parsed()) {
    const auto r = stages::run_simulate(cfg);
    fmt::print("true mean {:.6g}\n", r.true_mean);
    for (const auto& row : r.rows) {
      fmt::print("{:<10} {:>8g}  runs {:>4}  bias {:+.4g}  mean|err| {:.4g}  sd {:.4g}\n", to_string(row.strategy),
                 row.param, row.runs, row.mean_error, row.mean_abs_error, row.std_error);
    }
  } else if (rep->parsed()) {
    const auto out = stages::run_report(cfg);
    fmt::print("{} regions scored -> {}\n", out.scoring.scores.size(), cfg.path("out").string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tagmap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tagmap::is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
