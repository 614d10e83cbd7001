#include "tagmap/evaluation.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tagmap/error.hpp"

namespace tagmap {

double iou(std::span<const PixelPoint> a, std::span<const PixelPoint> b, const ImageDims& dims) {
  Bitmask ma(dims);
  Bitmask mb(dims);
  ma.fill_polygon(a);
  mb.fill_polygon(b);
  const auto uni = ma.count_or(mb);
  if (uni == 0) return 0.0;
  return static_cast<double>(ma.count_and(mb)) / static_cast<double>(uni);
}

std::vector<bool> greedy_match(std::span<const double> confidences, std::span<const double> iou_matrix,
                               std::size_t n_truth, double iou_thr) {
  const std::size_t n_det = confidences.size();
  if (iou_matrix.size() != n_det * n_truth) {
    throw Error(ErrorCode::InvalidArgument, "IoU matrix shape does not match detections x truths");
  }
  std::vector<std::size_t> order(n_det);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidences[a] > confidences[b]; });

  std::vector<bool> matched(n_truth, false);
  std::vector<bool> tp(n_det, false);
  for (std::size_t d : order) {
    double best = -1.0;
    std::size_t best_gt = n_truth;
    for (std::size_t g = 0; g < n_truth; ++g) {
      if (matched[g]) continue;
      const double v = iou_matrix[d * n_truth + g];
      if (v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < n_truth && best >= iou_thr) {
      matched[best_gt] = true;
      tp[d] = true;
    }
  }
  return tp;
}

std::vector<bool> match_detections(const DetectionSet& dets, std::span<const GroundTruthRegion> truths,
                                   const ImageDims& dims, double iou_thr) {
  const std::size_t nd = dets.regions.size();
  const std::size_t ng = truths.size();
  std::vector<Bitmask> det_masks;
  std::vector<Bitmask> gt_masks;
  det_masks.reserve(nd);
  gt_masks.reserve(ng);
  for (const auto& r : dets.regions) {
    det_masks.emplace_back(dims);
    det_masks.back().fill_polygon(r.polygon);
  }
  for (const auto& t : truths) {
    gt_masks.emplace_back(dims);
    gt_masks.back().fill_polygon(t.polygon);
  }
  std::vector<double> matrix(nd * ng, 0.0);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t g = 0; g < ng; ++g) {
      const auto uni = det_masks[d].count_or(gt_masks[g]);
      matrix[d * ng + g] = uni == 0 ? 0.0 : static_cast<double>(det_masks[d].count_and(gt_masks[g])) / uni;
    }
  }
  std::vector<double> conf;
  conf.reserve(nd);
  for (const auto& r : dets.regions) conf.push_back(r.confidence);
  return greedy_match(conf, matrix, ng, iou_thr);
}

std::vector<PRPoint> pr_sweep(std::span<const ScoredDetection> detections, std::uint64_t n_gt) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  std::vector<PRPoint> curve;
  curve.reserve(order.size());
  std::uint64_t tp = 0;
  std::uint64_t seen = 0;
  for (std::size_t i : order) {
    ++seen;
    if (detections[i].true_positive) ++tp;
    const double recall = n_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gt);
    curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(seen), detections[i].confidence});
  }
  return curve;
}

double voc_ap_11pt(std::span<const PRPoint> curve) {
  double sum = 0.0;
  for (int i = 0; i <= 10; ++i) {
    // i / 10.0 rather than an accumulated 0.1 step, so recall 0.3 reaches r = 0.3.
    const double r = static_cast<double>(i) / 10.0;
    double best = 0.0;
    for (const auto& p : curve) {
      if (p.recall >= r) best = std::max(best, p.precision);
    }
    sum += best;
  }
  return sum / 11.0;
}

Evaluation evaluate(std::span<const EvaluationImage> images, double iou_thr) {
  std::vector<ScoredDetection> pooled;
  std::uint64_t n_gt = 0;
  for (const auto& img : images) {
    const auto flags = match_detections(img.detections, img.truths, img.dims, iou_thr);
    for (std::size_t i = 0; i < flags.size(); ++i) {
      pooled.push_back({img.detections.regions[i].confidence, flags[i]});
    }
    n_gt += img.truths.size();
  }
  Evaluation out;
  out.curve = pr_sweep(pooled, n_gt);
  out.result = {voc_ap_11pt(out.curve), n_gt, pooled.size(), iou_thr};
  return out;
}

std::vector<GroundTruthRegion> truths_from_set(const DetectionSet& set) {
  std::vector<GroundTruthRegion> out;
  out.reserve(set.regions.size());
  for (const auto& r : set.regions) out.push_back({set.image_id, r.polygon});
  return out;
}

std::string pr_curve_to_csv(std::span<const PRPoint> curve) {
  std::string out = "rank,threshold,recall,precision\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out += fmt::format("{},{},{},{}\n", i + 1, curve[i].threshold, curve[i].recall, curve[i].precision);
  }
  return out;
}

std::string ap_result_to_json(const APResult& r) {
  return nlohmann::json{{"ap", r.ap}, {"n_gt", r.n_gt}, {"n_det", r.n_det}, {"iou_threshold", r.iou_threshold}}
             .dump(2) +
         "\n";
}

}  // namespace tagmap
