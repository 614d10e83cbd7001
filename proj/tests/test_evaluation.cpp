#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tagmap/evaluation.hpp"
#include "tagmap/io.hpp"

using namespace tagmap;

namespace {

PixelRing box(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

DetectionSet dets(std::vector<std::pair<PixelRing, double>> items) {
  DetectionSet s{"img", "t", {}};
  for (auto& [ring, c] : items) s.regions.push_back({std::move(ring), c, kGraffitiLabel});
  return s;
}

}  // namespace

TEST_CASE("iou") {
  const ImageDims dims{300, 200};
  CHECK(iou(box(10, 10, 60, 60), box(10, 10, 60, 60), dims) == 1.0);
  CHECK(iou(box(0, 0, 50, 50), box(100, 100, 150, 150), dims) == 0.0);
  CHECK(iou(box(0, 0, 100, 100), box(50, 0, 150, 100), dims) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Degenerate rings cover nothing.
  const PixelRing flat = {{0, 0}, {10, 0}, {20, 0}};
  CHECK(iou(flat, flat, dims) == 0.0);
}

TEST_CASE("match_detections examples") {
  const ImageDims dims{200, 200};
  const std::vector<GroundTruthRegion> one = {{"img", box(0, 0, 100, 100)}};
  CHECK(match_detections(dets({{box(0, 0, 100, 100), 0.9}}), one, dims) == std::vector<bool>{true});
  CHECK(match_detections(dets({{box(0, 0, 100, 100), 0.9}, {box(0, 0, 100, 100), 0.8}}), one, dims) ==
        std::vector<bool>{true, false});
  // Confidence order, not input order, decides who claims the truth.
  CHECK(match_detections(dets({{box(0, 0, 100, 100), 0.5}, {box(0, 0, 100, 90), 0.8}}), one, dims) ==
        std::vector<bool>{false, true});
  // Equal confidences: input order.
  CHECK(match_detections(dets({{box(0, 0, 100, 90), 0.7}, {box(0, 0, 100, 100), 0.7}}), one, dims) ==
        std::vector<bool>{true, false});
  // Below threshold.
  CHECK(match_detections(dets({{box(0, 0, 100, 40), 0.9}}), one, dims) == std::vector<bool>{false});
  CHECK(match_detections(dets({{box(0, 0, 100, 40), 0.9}}), one, dims, 0.4) == std::vector<bool>{true});
}

TEST_CASE("greedy matching agrees with the oracle on random instances") {
  std::mt19937_64 rng(99);
  constexpr int W = 36, H = 30;
  for (int inst = 0; inst < 300; ++inst) {
    std::vector<GroundTruthRegion> truths;
    const int ng = static_cast<int>(rng() % 6);
    const int nd = static_cast<int>(rng() % 6);
    for (int g = 0; g < ng; ++g) truths.push_back({"img", oracle::random_quad(rng, W, H)});
    DetectionSet s{"img", "t", {}};
    std::vector<double> conf;
    for (int d = 0; d < nd; ++d) {
      auto ring = (ng > 0 && rng() % 2) ? truths[rng() % ng].polygon : oracle::random_quad(rng, W, H);
      conf.push_back(static_cast<double>(rng() % 3) / 2.0);
      s.regions.push_back({ring, conf.back(), kGraffitiLabel});
    }
    std::vector<std::vector<double>> m(nd, std::vector<double>(ng));
    for (int d = 0; d < nd; ++d) {
      for (int g = 0; g < ng; ++g) m[d][g] = oracle::pixel_iou(s.regions[d].polygon, truths[g].polygon, W, H);
    }
    CHECK(match_detections(s, truths, {W, H}) == oracle::greedy(conf, m, ng, 0.5));
  }
}

TEST_CASE("11-point AP") {
  CHECK(voc_ap_11pt(std::vector<PRPoint>{{0.5, 1.0, 0.9}}) == doctest::Approx(6.0 / 11.0).epsilon(1e-15));
  CHECK(voc_ap_11pt(std::vector<PRPoint>{}) == 0.0);
  // Recall 0.3 must count at r = 0.3 despite 0.1 not being exact in binary.
  CHECK(voc_ap_11pt(std::vector<PRPoint>{{0.3, 1.0, 0.9}}) == doctest::Approx(4.0 / 11.0).epsilon(1e-15));

  const auto curve = pr_sweep(std::vector<ScoredDetection>{{0.9, true}, {0.8, false}, {0.7, true}}, 4);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].recall == 0.25);
  CHECK(curve[1].precision == 0.5);
  CHECK(curve[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(curve[2].threshold == 0.7);
}

TEST_CASE("AP properties: matches the oracle, monotone in TPs, rank-only") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<ScoredDetection> list;
    std::vector<double> conf;
    std::vector<bool> tp;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      list.push_back({uniform01(rng), rng() % 2 == 0});
      conf.push_back(list.back().confidence);
      tp.push_back(list.back().true_positive);
      hits += tp.back();
    }
    const std::uint64_t n_gt = hits + rng() % 3;
    if (n_gt == 0) continue;
    const double ap = voc_ap_11pt(pr_sweep(list, n_gt));
    CHECK(std::abs(ap - oracle::ap_11pt(conf, tp, n_gt)) < 1e-12);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);

    auto rescaled = list;
    for (auto& d : rescaled) d.confidence = std::exp(3 * d.confidence) - 7;
    CHECK(voc_ap_11pt(pr_sweep(rescaled, n_gt)) == ap);

    for (std::size_t i = 0; i < n; ++i) {
      if (list[i].true_positive || hits == n_gt) continue;
      auto better = list;
      better[i].true_positive = true;
      CHECK(voc_ap_11pt(pr_sweep(better, n_gt)) >= ap - 1e-15);
      break;
    }
  }
}

TEST_CASE("evaluate pools images") {
  EvaluationImage a{dets({{box(0, 0, 50, 50), 0.9}, {box(60, 60, 90, 90), 0.4}}), {{"img", box(0, 0, 50, 50)}}, {100, 100}};
  EvaluationImage b{dets({{box(0, 0, 20, 20), 0.6}}), {{"img", box(0, 0, 20, 20)}, {"img", box(50, 50, 80, 80)}}, {100, 100}};
  const auto e = evaluate(std::vector{a, b});
  CHECK(e.result.n_gt == 3);
  CHECK(e.result.n_det == 3);
  REQUIRE(e.curve.size() == 3);
  // Ranked: 0.9 TP, 0.6 TP, 0.4 FP.
  CHECK(e.curve[1].recall == doctest::Approx(2.0 / 3.0));
  CHECK(e.curve[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(e.result.ap == doctest::Approx(oracle::ap_11pt({0.9, 0.4, 0.6}, {true, false, true}, 3)));

  const auto j = nlohmann::json::parse(ap_result_to_json(e.result));
  CHECK(j["n_gt"] == 3);
  CHECK(j["iou_threshold"] == 0.5);
  CHECK(pr_curve_to_csv(e.curve).rfind("rank,threshold,recall,precision\n1,0.9,", 0) == 0);
}
