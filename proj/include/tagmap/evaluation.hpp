#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tagmap/detection.hpp"

namespace tagmap {

inline constexpr double kDefaultIouThreshold = 0.5;

struct GroundTruthRegion {
  std::string image_id;
  PixelRing polygon;
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;  // confidence of the detection that produced the point
};

struct APResult {
  double ap = 0.0;
  std::uint64_t n_gt = 0;
  std::uint64_t n_det = 0;
  double iou_threshold = kDefaultIouThreshold;
};

// Rasterized intersection over union; 0 when both polygons are empty.
double iou(std::span<const PixelPoint> a, std::span<const PixelPoint> b, const ImageDims& dims);

// Greedy VOC matching given a detections x truths IoU matrix (row-major).
// Detections are visited by descending confidence, ties by input order; each
// takes its best-IoU still-unmatched truth when that IoU reaches iou_thr.
// Returns TP flags aligned with the input order.
std::vector<bool> greedy_match(std::span<const double> confidences, std::span<const double> iou_matrix,
                               std::size_t n_truth, double iou_thr);

std::vector<bool> match_detections(const DetectionSet& dets, std::span<const GroundTruthRegion> truths,
                                   const ImageDims& dims, double iou_thr = kDefaultIouThreshold);

struct ScoredDetection {
  double confidence = 0.0;
  bool true_positive = false;
};

// One PR point per detection, in descending-confidence order (stable).
std::vector<PRPoint> pr_sweep(std::span<const ScoredDetection> detections, std::uint64_t n_gt);

// Mean over r in {0, 0.1, ..., 1} of the best precision at recall >= r
// (0 when no point reaches r).
double voc_ap_11pt(std::span<const PRPoint> curve);

struct EvaluationImage {
  DetectionSet detections;
  std::vector<GroundTruthRegion> truths;
  ImageDims dims;
};

struct Evaluation {
  APResult result;
  std::vector<PRPoint> curve;
};

// Per-image matching, then one PR sweep over all detections pooled.
Evaluation evaluate(std::span<const EvaluationImage> images, double iou_thr = kDefaultIouThreshold);

std::vector<GroundTruthRegion> truths_from_set(const DetectionSet& set);

std::string pr_curve_to_csv(std::span<const PRPoint> curve);
std::string ap_result_to_json(const APResult& r);

}  // namespace tagmap
