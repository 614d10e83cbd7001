#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tagmap/acquisition.hpp"
#include "tagmap/config.hpp"
#include "tagmap/evaluation.hpp"
#include "tagmap/metrics.hpp"
#include "tagmap/survey_sim.hpp"

// One function per pipeline stage. Stages hand off through files (plan ->
// manifest -> detections -> scores), so each can be re-run on its own.
namespace tagmap::stages {

inline constexpr const char* kToolVersion = "0.1.0";

// grid: region -> plan (systematic lattice).
SamplePlan run_grid(const PipelineConfig& cfg);
// sample: region -> plan (uniform random points).
SamplePlan run_sample(const PipelineConfig& cfg);
// acquire: plan -> manifest. `clock` overrides the pacing clock.
AcquireStats run_acquire(const PipelineConfig& cfg, Clock* clock = nullptr);
// detect: manifest -> detections directory. Returns the number of images processed.
std::size_t run_detect(const PipelineConfig& cfg);

struct ScoreOutputs {
  SamplePlan covered;  // plan after coverage filtering
  std::vector<LocationLevel> levels;
  RegionScoring scoring;
  std::vector<RegionPolygon> regions;
};

ScoreOutputs compute_scores(const PipelineConfig& cfg);
// score: plan + manifest + detections -> points.csv, regions.csv.
ScoreOutputs run_score(const PipelineConfig& cfg);
// eval: detections + truth -> pr_curve.csv, ap.json.
Evaluation run_eval(const PipelineConfig& cfg);
// simulate: region + synthetic field -> simulate.csv, error_chart.svg.
BiasVarianceReport run_simulate(const PipelineConfig& cfg);

// Files of a report bundle, relative to the output directory.
const std::vector<std::string>& report_bundle_files();

// report: plan + manifest + detections -> regions.geojson, points.csv,
// regions.csv, years.csv, choropleth.svg, metadata.json.
ScoreOutputs run_report(const PipelineConfig& cfg);

// Simulated provider + synthetic detector over `area` (grid) and `districts`
// (scoring), all under `workdir`. Returns the report directory.
std::filesystem::path run_demo(const std::filesystem::path& area, const std::filesystem::path& districts,
                               const std::filesystem::path& workdir);

}  // namespace tagmap::stages
