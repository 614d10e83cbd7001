#include <doctest.h>

#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "tagmap/acquisition.hpp"
#include "tagmap/clock.hpp"
#include "tagmap/error.hpp"
#include "tagmap/image.hpp"
#include "tagmap/io.hpp"
#include "tagmap/metrics.hpp"
#include "tagmap/providers.hpp"

using namespace tagmap;
namespace fs = std::filesystem;

namespace {

SamplePlan two_points() {
  SamplePlan plan;
  plan.points.emplace_back(GeoPoint(-23.55, -46.63));
  plan.points.emplace_back(GeoPoint(-23.56, -46.64));
  return plan;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tagmap_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

AcquireOptions fast(SimulatedClock& clock) {
  AcquireOptions opts;
  opts.clock = &clock;
  return opts;
}

}  // namespace

TEST_CASE("plan_views headings") {
  const SamplePoint p(GeoPoint(1, 2));
  auto headings = [&](unsigned k) {
    std::vector<double> out;
    for (const auto& v : plan_views(p, k)) out.push_back(v.heading_deg);
    return out;
  };
  CHECK(headings(4) == std::vector<double>{0, 90, 180, 270});
  CHECK(headings(1) == std::vector<double>{0});
  CHECK(headings(3) == std::vector<double>{0, 120, 240});
  const auto views = plan_views(p, 2);
  CHECK(views[0].point_id == p.point_id);
  CHECK(views[0].fov_deg == 90);
  CHECK(views[0].width_px == 640);

  try {
    plan_views(p, 0);
    FAIL("expected InvalidK");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidK);
  }
  CHECK_THROWS_AS(plan_views(p, 4, {150, 640, 640}), Error);
}

TEST_CASE("image ids are stable and distinct per view") {
  CHECK(make_image_id("1_2", 90) == make_image_id("1_2", 90));
  CHECK(make_image_id("1_2", 90) != make_image_id("1_2", 180));
  CHECK(make_image_id("1_2", 90).size() == 16);
}

TEST_CASE("ImageRecord JSON uses the documented field names") {
  ImageRecord r;
  r.image_id = "abc";
  r.point_id = "1_2";
  r.heading_deg = 90;
  r.capture_year = 2017;
  r.provider = ProviderKind::External;
  r.width_px = 640;
  r.height_px = 480;
  r.storage_ref = "images/abc.png";
  r.status = ImageStatus::Ok;
  const nlohmann::json j = r;
  for (const char* key : {"image_id", "point_id", "heading_deg", "capture_year", "provider", "width_px", "height_px",
                          "storage_ref", "status"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["provider"] == "external");
  CHECK(j["status"] == "ok");
  CHECK(j.get<ImageRecord>() == r);

  r.capture_year.reset();
  const nlohmann::json k = r;
  CHECK(k["capture_year"].is_null());
  CHECK(k.get<ImageRecord>() == r);
}

TEST_CASE("Manifest invariants and persistence") {
  ImageRecord r;
  r.image_id = "a";
  r.point_id = "p";
  r.status = ImageStatus::Ok;
  Manifest m;
  CHECK_THROWS_AS(m.append(r), Error);  // ok without storage or dims
  r.storage_ref = "x";
  r.width_px = r.height_px = 10;
  m.append(r);
  try {
    m.append(r);
    FAIL("expected DuplicateRecord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateRecord);
  }

  const auto dir = scratch("manifest");
  const auto path = dir / "m.jsonl";
  {
    auto file = Manifest::open(path);
    file.append(r);
    ImageRecord f;
    f.image_id = "b";
    f.point_id = "p";
    f.status = ImageStatus::Failed;
    file.append(f);
  }
  auto again = Manifest::open(path);
  REQUIRE(again.size() == 2);
  CHECK(again.records()[0] == r);
  CHECK(again.records()[1].status == ImageStatus::Failed);
  CHECK(split_lines(read_file(path)).size() == 2);
}

TEST_CASE("acquire with the simulated provider") {
  SimulatedClock clock;
  const auto plan = two_points();
  SimulatedProvider provider({.seed = 1});
  Manifest store;
  const auto stats = acquire(plan, provider, store, fast(clock));
  CHECK(store.size() == 8);
  CHECK(stats.fetched == 8);
  for (const auto& r : store.records()) {
    CHECK(r.status == ImageStatus::Ok);
    CHECK(r.provider == ProviderKind::FirstParty);
    CHECK(r.width_px == 640);
    CHECK(r.capture_year.has_value());
  }
  // Records are committed in plan order regardless of worker timing.
  CHECK(store.records()[0].point_id == plan.points[0].point_id);
  CHECK(store.records()[3].heading_deg == 270);
  CHECK(store.records()[4].point_id == plan.points[1].point_id);

  SUBCASE("a second run makes no provider calls") {
    const auto before = store.to_jsonl();
    const auto calls = provider.calls();
    const auto again = acquire(plan, provider, store, fast(clock));
    CHECK(provider.calls() == calls);
    CHECK(again.client_calls == 0);
    CHECK(again.reused == 8);
    CHECK(store.to_jsonl() == before);
  }

  SUBCASE("identical configuration, identical manifest") {
    SimulatedProvider twin({.seed = 1});
    Manifest other;
    acquire(plan, twin, other, fast(clock));
    CHECK(other.to_jsonl() == store.to_jsonl());
  }
}

TEST_CASE("acquire labels external and unmapped points") {
  SimulatedClock clock;
  const auto plan = two_points();
  SimulatedProviderConfig cfg;
  cfg.external_points = {plan.points[1].point_id};
  SimulatedProvider provider(cfg);
  Manifest store;
  acquire(plan, provider, store, fast(clock));
  for (const auto& r : store.records()) {
    CHECK(r.provider == (r.point_id == plan.points[1].point_id ? ProviderKind::External : ProviderKind::FirstParty));
  }
  CHECK(coverage_filter(plan, store, 4).points.size() == 1);

  SimulatedProviderConfig gaps;
  gaps.unmapped_points = {plan.points[0].point_id};
  SimulatedProvider holes(gaps);
  Manifest sparse;
  const auto stats = acquire(plan, holes, sparse, fast(clock));
  CHECK(sparse.size() == 8);
  CHECK(stats.failed == 0);
  std::size_t unmapped = 0;
  for (const auto& r : sparse.records()) unmapped += r.status == ImageStatus::Unmapped;
  CHECK(unmapped == 4);
}

TEST_CASE("acquire retries with exponential backoff") {
  SamplePlan plan;
  plan.points.emplace_back(GeoPoint(0, 0));
  AcquireOptions opts;
  opts.k = 1;
  opts.workers = 1;
  opts.rate_per_s = 0;

  SUBCASE("recovers on the third attempt after waiting 1 s + 2 s") {
    SimulatedClock clock;
    opts.clock = &clock;
    SimulatedProvider provider({.transient_failures = 2});
    Manifest store;
    const auto stats = acquire(plan, provider, store, opts);
    CHECK(stats.client_calls == 3);
    CHECK(store.records()[0].status == ImageStatus::Ok);
    CHECK(clock.now() == doctest::Approx(3.0));
  }

  SUBCASE("gives up after 3 retries and records a failure") {
    SimulatedClock clock;
    opts.clock = &clock;
    SimulatedProvider provider({.transient_failures = 10});
    Manifest store;
    const auto stats = acquire(plan, provider, store, opts);
    CHECK(stats.client_calls == 4);
    CHECK(stats.failed == 1);
    CHECK(store.records()[0].status == ImageStatus::Failed);
    CHECK(clock.now() == doctest::Approx(1.0 + 2.0 + 4.0));
  }
}

TEST_CASE("rate limiter: N fetches take at least (N - 1) / q") {
  SimulatedClock clock;
  SamplePlan plan;
  for (int i = 0; i < 5; ++i) plan.points.emplace_back(GeoPoint(0.001 * i, 0));
  SimulatedProvider provider({});
  Manifest store;
  AcquireOptions opts;
  opts.clock = &clock;
  opts.rate_per_s = 4;
  opts.workers = 8;
  const auto stats = acquire(plan, provider, store, opts);
  CHECK(stats.client_calls == 20);
  CHECK(clock.now() >= (20 - 1) / 4.0 - 1e-9);

  RateLimiter limiter(clock, 2.0);
  const double t0 = clock.now();
  for (int i = 0; i < 7; ++i) limiter.acquire();
  CHECK(clock.now() - t0 >= 3.0 - 1e-9);
}

TEST_CASE("ProviderAuth aborts the run") {
  SimulatedClock clock;
  SimulatedProvider provider({.reject_auth = true});
  Manifest store;
  try {
    acquire(two_points(), provider, store, fast(clock));
    FAIL("expected ProviderAuth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderAuth);
  }
  CHECK(store.empty());
}

TEST_CASE("simulated provider writes image blobs when asked") {
  const auto dir = scratch("blobs");
  SimulatedClock clock;
  SimulatedProviderConfig cfg;
  cfg.blob_dir = dir;
  SimulatedProvider provider(cfg);
  Manifest store;
  acquire(two_points(), provider, store, fast(clock));
  for (const auto& r : store.records()) {
    const auto dims = image_dimensions(read_file(r.storage_ref));
    REQUIRE(dims.has_value());
    CHECK(dims->width == r.width_px);
    CHECK(dims->height == r.height_px);
  }
}

TEST_CASE("directory provider") {
  const auto dir = scratch("corpus");
  const SamplePoint p(GeoPoint(-23.5, -46.6));
  write_file_atomic(dir / (p.point_id + "_0.png"), encode_png_gray(32, 24, 100));
  write_file_atomic(dir / ("_" + p.point_id + "_90.png"), encode_png_gray(32, 24, 100));
  write_file_atomic(dir / ("_" + p.point_id + "_90.json"), R"({"capture_year": 2014, "provider": "external"})");

  DirectoryProvider provider(dir);
  SimulatedClock clock;
  SamplePlan plan;
  plan.points.push_back(p);
  Manifest store;
  acquire(plan, provider, store, fast(clock));
  REQUIRE(store.size() == 4);
  const auto& north = store.records()[0];
  CHECK(north.status == ImageStatus::Ok);
  CHECK(north.width_px == 32);
  CHECK(north.height_px == 24);
  CHECK_FALSE(north.capture_year.has_value());
  const auto& east = store.records()[1];
  CHECK(east.capture_year == 2014);
  CHECK(east.provider == ProviderKind::External);
  CHECK(store.records()[2].status == ImageStatus::Unmapped);

  CHECK_THROWS_AS(DirectoryProvider(dir / "missing"), Error);
}

TEST_CASE("year histogram") {
  CHECK(year_histogram(Manifest{}).total() == 0);
  CHECK(year_histogram(Manifest{}).share(2017) == 0.0);

  Manifest m;
  auto add = [&](const std::string& id, std::optional<int> year, ImageStatus status) {
    ImageRecord r;
    r.image_id = id;
    r.point_id = "p";
    r.capture_year = year;
    r.status = status;
    if (status == ImageStatus::Ok) {
      r.storage_ref = "x";
      r.width_px = r.height_px = 1;
    }
    m.append(r);
  };
  add("a", 2017, ImageStatus::Ok);
  add("b", 2017, ImageStatus::Ok);
  add("c", 2011, ImageStatus::Ok);
  add("d", std::nullopt, ImageStatus::Ok);
  add("e", 2017, ImageStatus::Unmapped);
  const auto h = year_histogram(m);
  CHECK(h.years == std::map<int, std::uint64_t>{{2011, 1}, {2017, 2}});
  CHECK(h.unknown == 1);
  CHECK(h.share(2017) == doctest::Approx(0.5));
  CHECK(histogram_to_csv(h) == "year,count\n2011,1\n2017,2\nunknown,1\n");
}

TEST_CASE("simulated capture years follow the reference distribution") {
  const auto& ref = reference_year_counts();
  std::uint64_t total = 0;
  for (const auto& [y, c] : ref) total += c;
  CHECK(total == 68845);

  SimulatedProvider provider({.seed = 3});
  std::map<int, int> seen;
  for (int i = 0; i < 4000; ++i) {
    const SamplePoint p(GeoPoint(0.0001 * i, 0));
    const auto r = provider.probe(plan_views(p, 1)[0], p.location);
    ++seen[*r.capture_year];
  }
  // 2017 holds 57.2% of the reference; with 4000 draws 3 sigma is about 2.3 points.
  CHECK(std::abs(seen[2017] / 4000.0 - 0.572) < 0.03);
}
