#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagmap/geo.hpp"
#include "tagmap/sampling.hpp"

namespace tagmap {

struct Bump {
  GeoPoint center;
  double amplitude = 1.0;  // >= 0
  double sigma_m = 500.0;  // > 0
};

// Synthetic graffiti intensity: baseline + sum of isotropic Gaussian bumps,
// with distances measured in the local plane at each bump's latitude.
class DensityField {
 public:
  DensityField(double baseline, std::vector<Bump> bumps, std::uint64_t seed = 0);

  // `n_bumps` bumps with centres uniform over the region's bounding box.
  static DensityField random(std::uint64_t seed, const BoundingBox& box, unsigned n_bumps,
                             double min_sigma_m, double max_sigma_m, double max_amplitude = 1.0);

  double operator()(const GeoPoint& p) const noexcept;
  double baseline() const noexcept { return baseline_; }
  const std::vector<Bump>& bumps() const noexcept { return bumps_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::optional<double> min_sigma_m() const noexcept;

 private:
  double baseline_;
  std::vector<Bump> bumps_;
  std::uint64_t seed_;
};

// Midpoint lattice used by the reference mean: cell centres starting half a
// step inside the bounding box's minimum corner.
struct QuadratureSpec {
  double spacing_m;
  GeoPoint anchor;
};

// Spacing min(sigma) / 10, or 1/200 of the shorter box side for a flat field.
QuadratureSpec default_quadrature(const DensityField& field, std::span<const RegionPolygon> parts);
QuadratureSpec quadrature_at(std::span<const RegionPolygon> parts, double spacing_m);

// Mean of the field over the region, by midpoint quadrature. Throws
// EmptyRegion when no cell centre falls inside.
double true_regional_mean(const DensityField& field, std::span<const RegionPolygon> parts,
                          std::optional<QuadratureSpec> quad = std::nullopt);

enum class AnchorMode { Corner, RandomStart };

struct EstimatorConfig {
  Strategy strategy = Strategy::Random;
  double param = 0.0;  // spacing_m (systematic) or n (random)
  std::vector<std::uint64_t> seeds;
  // Systematic only: RandomStart offsets the lattice origin by a seeded
  // uniform fraction of one step per axis.
  AnchorMode anchor_mode = AnchorMode::Corner;
};

struct EstimatorRun {
  Strategy strategy = Strategy::Random;
  double param = 0.0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double true_mean = 0.0;
  double abs_error = 0.0;
};

// Mean of the field over the sample plan drawn with the given strategy.
EstimatorRun run_estimator(const DensityField& field, std::span<const RegionPolygon> parts, Strategy strategy,
                           double param, std::uint64_t seed, double true_mean,
                           AnchorMode anchor_mode = AnchorMode::Corner);

struct ErrorRow {
  Strategy strategy = Strategy::Random;
  double param = 0.0;
  std::size_t runs = 0;
  double mean_error = 0.0;      // mean of (estimate - true_mean)
  double mean_abs_error = 0.0;
  double std_error = 0.0;       // sample standard deviation of the estimates
};

struct BiasVarianceReport {
  double true_mean = 0.0;
  std::vector<ErrorRow> rows;  // one per config, in input order
};

// Runs every (config, seed) pair (in parallel) and aggregates per config.
BiasVarianceReport bias_variance_report(const DensityField& field, std::span<const RegionPolygon> parts,
                                        std::span<const EstimatorConfig> configs);

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count);

std::string report_to_csv(const BiasVarianceReport& report);

}  // namespace tagmap
