#include <doctest.h>

#include <cmath>

#include "tagmap/error.hpp"
#include "tagmap/sampling.hpp"
#include "tagmap/survey_sim.hpp"

using namespace tagmap;

namespace {

// Square with sides of `side_m`, east-west extent measured at mid-latitude.
RegionPolygon square_m(double lat0, double lon0, double side_m) {
  const double dlat = side_m / kMetersPerDegree;
  const double dlon = side_m / (kMetersPerDegree * std::cos((lat0 + dlat / 2) * kPi / 180.0));
  return RegionPolygon("sq", {{lat0, lon0}, {lat0, lon0 + dlon}, {lat0 + dlat, lon0 + dlon}, {lat0 + dlat, lon0}});
}

const std::vector<RegionPolygon>& city() {
  static const std::vector<RegionPolygon> parts = {square_m(-23.6, -46.75, 10000)};
  return parts;
}

}  // namespace

TEST_CASE("density field") {
  const GeoPoint c(-23.55, -46.7);
  const DensityField f(0.0, {{c, 2.0, 500.0}});
  CHECK(f(c) == 2.0);
  // One sigma north.
  CHECK(f(GeoPoint(c.lat() + 500 / kMetersPerDegree, c.lon())) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-9));

  const auto a = DensityField::random(9, city()[0].bbox(), 3, 600, 1500);
  const auto b = DensityField::random(9, city()[0].bbox(), 3, 600, 1500);
  REQUIRE(a.bumps().size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.bumps()[i].center == b.bumps()[i].center);
    CHECK(a.bumps()[i].sigma_m >= 600);
    CHECK(a.bumps()[i].sigma_m <= 1500);
    CHECK(a.bumps()[i].amplitude >= 0);
  }
  CHECK(*a.min_sigma_m() >= 600);
}

TEST_CASE("true regional mean") {
  CHECK(std::abs(true_regional_mean(DensityField(0.37, {}), city()) - 0.37) < 1e-9);
  CHECK(true_regional_mean(DensityField(0.0, {{GeoPoint(-23.55, -46.7), 0.0, 800}}), city()) == 0.0);

  // A bump well inside a 10 km square integrates to 2 pi A sigma^2.
  const auto& box = city()[0].bbox();
  const GeoPoint centre(box.mid_lat(), 0.5 * (box.min_lon + box.max_lon));
  const DensityField bump(0.0, {{centre, 1.5, 700}});
  const double expected = 2 * kPi * 1.5 * 700 * 700 / (10000.0 * 10000.0);
  CHECK(true_regional_mean(bump, city()) == doctest::Approx(expected).epsilon(0.005));

  const RegionPolygon sliver("s", {{0, 0}, {0, 1e-7}, {1e-7, 1e-7}});
  CHECK_THROWS_AS(true_regional_mean(DensityField(1, {}), std::vector{sliver}, QuadratureSpec{1000, GeoPoint(0.5, 0.5)}),
                  Error);
}

TEST_CASE("estimators on a constant field are exact") {
  const DensityField flat(0.25, {});
  for (auto [strategy, param] : {std::pair{Strategy::Systematic, 300.0}, std::pair{Strategy::Random, 50.0}}) {
    const auto run = run_estimator(flat, city(), strategy, param, 3, 0.25);
    CHECK(run.estimate == 0.25);
    CHECK(run.abs_error == 0.0);
  }
}

TEST_CASE("systematic estimate on the quadrature lattice reproduces the oracle") {
  const auto field = DensityField::random(4, city()[0].bbox(), 2, 600, 1500);
  const auto& box = city()[0].bbox();
  const double truth = true_regional_mean(field, city(), QuadratureSpec{250, GeoPoint(box.min_lat, box.min_lon)});
  const auto run = run_estimator(field, city(), Strategy::Systematic, 250, 0, truth);
  CHECK(run.abs_error < 1e-9);
  CHECK(run.abs_error == std::abs(run.estimate - run.true_mean));
}

TEST_CASE("random sampling: unbiased, and spread shrinks as 1 / sqrt(n)") {
  const auto field = DensityField::random(3, city()[0].bbox(), 2, 600, 1500);
  const auto seeds = seed_range(1, 200);
  const std::vector<EstimatorConfig> configs = {{Strategy::Random, 500, seeds}, {Strategy::Random, 2000, seeds}};
  const auto report = bias_variance_report(field, city(), configs);
  REQUIRE(report.rows.size() == 2);
  for (const auto& row : report.rows) {
    CHECK(row.runs == 200);
    CHECK(std::abs(row.mean_error) < 3 * row.std_error / std::sqrt(200.0));
  }
  CHECK(report.rows[0].std_error / report.rows[1].std_error == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("systematic refinement with a fixed corner anchor") {
  const auto field = DensityField::random(3, city()[0].bbox(), 2, 600, 1500);
  const double truth = true_regional_mean(field, city());
  double previous = INFINITY;
  for (double s : {400.0, 200.0, 100.0}) {
    const double err = run_estimator(field, city(), Strategy::Systematic, s, 0, truth).abs_error;
    CHECK(err <= 1.1 * previous);
    previous = err;
  }
}

TEST_CASE("report shape and determinism") {
  const auto field = DensityField::random(1, city()[0].bbox(), 2, 600, 1500);
  const std::vector<EstimatorConfig> single = {{Strategy::Random, 100, seed_range(1, 5)}};
  const auto a = bias_variance_report(field, city(), single);
  const auto b = bias_variance_report(field, city(), single);
  REQUIRE(a.rows.size() == 1);
  CHECK(report_to_csv(a) == report_to_csv(b));
  CHECK(report_to_csv(a).rfind("strategy,param,runs,true_mean,mean_error,mean_abs_error,std_error\n", 0) == 0);

  const std::vector<EstimatorConfig> jitter = {{Strategy::Systematic, 400, seed_range(1, 4), AnchorMode::RandomStart}};
  const auto j = bias_variance_report(field, city(), jitter);
  CHECK(j.rows[0].runs == 4);
  CHECK(j.rows[0].std_error > 0);
}
