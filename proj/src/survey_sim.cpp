#include "tagmap/survey_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "tagmap/error.hpp"
#include "tagmap/io.hpp"

namespace tagmap {

namespace {

constexpr double kDegToRad = kPi / 180.0;

// Neumaier summation in input order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

DensityField::DensityField(double baseline, std::vector<Bump> bumps, std::uint64_t seed)
    : baseline_(baseline), bumps_(std::move(bumps)), seed_(seed) {
  if (!(baseline_ >= 0.0) || !std::isfinite(baseline_)) {
    throw Error(ErrorCode::InvalidArgument, "baseline must be finite and non-negative");
  }
  for (const auto& b : bumps_) {
    if (!(b.amplitude >= 0.0) || !std::isfinite(b.amplitude)) {
      throw Error(ErrorCode::InvalidArgument, "bump amplitude must be non-negative");
    }
    if (!(b.sigma_m > 0.0) || !std::isfinite(b.sigma_m)) {
      throw Error(ErrorCode::InvalidArgument, "bump sigma must be positive");
    }
  }
}

DensityField DensityField::random(std::uint64_t seed, const BoundingBox& box, unsigned n_bumps,
                                  double min_sigma_m, double max_sigma_m, double max_amplitude) {
  std::mt19937_64 rng(seed);
  std::vector<Bump> bumps;
  bumps.reserve(n_bumps);
  for (unsigned i = 0; i < n_bumps; ++i) {
    const double lat = box.min_lat + uniform01(rng) * (box.max_lat - box.min_lat);
    const double lon = box.min_lon + uniform01(rng) * (box.max_lon - box.min_lon);
    const double sigma = min_sigma_m + uniform01(rng) * (max_sigma_m - min_sigma_m);
    const double amp = max_amplitude * (0.25 + 0.75 * uniform01(rng));
    bumps.push_back({GeoPoint(lat, lon), amp, sigma});
  }
  return DensityField(0.0, std::move(bumps), seed);
}

double DensityField::operator()(const GeoPoint& p) const noexcept {
  double f = baseline_;
  for (const auto& b : bumps_) {
    const double dy = (p.lat() - b.center.lat()) * kMetersPerDegree;
    const double dx = (p.lon() - b.center.lon()) * kMetersPerDegree * std::cos(b.center.lat() * kDegToRad);
    f += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma_m * b.sigma_m));
  }
  return f;
}

std::optional<double> DensityField::min_sigma_m() const noexcept {
  if (bumps_.empty()) return std::nullopt;
  double m = bumps_.front().sigma_m;
  for (const auto& b : bumps_) m = std::min(m, b.sigma_m);
  return m;
}

QuadratureSpec quadrature_at(std::span<const RegionPolygon> parts, double spacing_m) {
  const BoundingBox box = bbox_of(parts);
  const auto steps = local_degree_steps(GeoPoint(box.mid_lat(), box.min_lon), spacing_m);
  return {spacing_m, GeoPoint(box.min_lat + steps.dlat_deg / 2.0, box.min_lon + steps.dlon_deg / 2.0)};
}

QuadratureSpec default_quadrature(const DensityField& field, std::span<const RegionPolygon> parts) {
  const BoundingBox box = bbox_of(parts);
  const double height_m = (box.max_lat - box.min_lat) * kMetersPerDegree;
  const double width_m = (box.max_lon - box.min_lon) * kMetersPerDegree * std::cos(box.mid_lat() * kDegToRad);
  double h = std::min(height_m, width_m) / 200.0;
  if (const auto sigma = field.min_sigma_m()) h = std::min(h, *sigma / 10.0);
  return quadrature_at(parts, h);
}

double true_regional_mean(const DensityField& field, std::span<const RegionPolygon> parts,
                          std::optional<QuadratureSpec> quad) {
  const QuadratureSpec q = quad.value_or(default_quadrature(field, parts));
  const BoundingBox box = bbox_of(parts);
  const auto steps = local_degree_steps(GeoPoint(box.mid_lat(), box.min_lon), q.spacing_m);
  CompensatedSum sum;
  std::size_t count = 0;
  for (long i = 0;; ++i) {
    const double lat = q.anchor.lat() + static_cast<double>(i) * steps.dlat_deg;
    if (lat > box.max_lat) break;
    for (long j = 0;; ++j) {
      const double lon = q.anchor.lon() + static_cast<double>(j) * steps.dlon_deg;
      if (lon > box.max_lon) break;
      const GeoPoint p(lat, lon);
      if (!inside_any(p, parts)) continue;
      sum.add(field(p));
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptyRegion, "no quadrature node inside the region");
  return sum.value() / static_cast<double>(count);
}

EstimatorRun run_estimator(const DensityField& field, std::span<const RegionPolygon> parts, Strategy strategy,
                           double param, std::uint64_t seed, double true_mean, AnchorMode anchor_mode) {
  GridSpec spec;
  spec.strategy = strategy;
  spec.seed = seed;
  SamplePlan plan;
  if (strategy == Strategy::Systematic) {
    spec.spacing_m = param;
    if (anchor_mode == AnchorMode::RandomStart) {
      const BoundingBox box = bbox_of(parts);
      const auto steps = local_degree_steps(GeoPoint(box.mid_lat(), box.min_lon), param);
      std::mt19937_64 rng(seed);
      const double u = uniform01(rng);
      const double v = uniform01(rng);
      spec.anchor = GeoPoint(box.min_lat + u * steps.dlat_deg, box.min_lon + v * steps.dlon_deg);
    }
    plan = build_systematic_grid(parts, spec);
  } else {
    if (!(param >= 1.0) || param != std::floor(param)) {
      throw Error(ErrorCode::InvalidArgument, "random strategy needs a positive integer sample size");
    }
    spec.n_random = static_cast<std::uint64_t>(param);
    plan = sample_random(parts, spec);
  }
  CompensatedSum sum;
  for (const auto& p : plan.points) sum.add(field(p.location));
  const double estimate = sum.value() / static_cast<double>(plan.points.size());
  return {strategy, param, seed, estimate, true_mean, std::abs(estimate - true_mean)};
}

BiasVarianceReport bias_variance_report(const DensityField& field, std::span<const RegionPolygon> parts,
                                        std::span<const EstimatorConfig> configs) {
  if (configs.empty()) throw Error(ErrorCode::InvalidArgument, "bias/variance report needs a config");
  BiasVarianceReport report;
  report.true_mean = true_regional_mean(field, parts);

  struct Task {
    std::size_t config;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& seeds = configs[c].seeds;
    if (seeds.empty()) tasks.push_back({c, 0});
    for (auto s : seeds) tasks.push_back({c, s});
  }

  std::vector<EstimatorRun> runs(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(tasks.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < tasks.size(); i += n_threads) {
          const auto& cfg = configs[tasks[i].config];
          try {
            runs[i] = run_estimator(field, parts, cfg.strategy, cfg.param, tasks[i].seed, report.true_mean,
                                    cfg.anchor_mode);
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

  std::size_t i = 0;
  for (const auto& cfg : configs) {
    const std::size_t n = std::max<std::size_t>(1, cfg.seeds.size());
    CompensatedSum err;
    CompensatedSum abs_err;
    CompensatedSum est;
    for (std::size_t k = 0; k < n; ++k) {
      err.add(runs[i + k].estimate - report.true_mean);
      abs_err.add(runs[i + k].abs_error);
      est.add(runs[i + k].estimate);
    }
    const double mean_est = est.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = runs[i + k].estimate - mean_est;
      sq.add(d * d);
    }
    ErrorRow row;
    row.strategy = cfg.strategy;
    row.param = cfg.param;
    row.runs = n;
    row.mean_error = err.value() / static_cast<double>(n);
    row.mean_abs_error = abs_err.value() / static_cast<double>(n);
    row.std_error = n > 1 ? std::sqrt(sq.value() / static_cast<double>(n - 1)) : 0.0;
    report.rows.push_back(row);
    i += n;
  }
  return report;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

std::string report_to_csv(const BiasVarianceReport& report) {
  std::string out = "strategy,param,runs,true_mean,mean_error,mean_abs_error,std_error\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", to_string(r.strategy), r.param, r.runs, report.true_mean,
                       r.mean_error, r.mean_abs_error, r.std_error);
  }
  return out;
}

}  // namespace tagmap
