#pragma once

#include <span>
#include <string>

#include "tagmap/geo.hpp"
#include "tagmap/metrics.hpp"
#include "tagmap/survey_sim.hpp"

namespace tagmap {

// Choropleth of mean levels: one path per region (sorted by region_id), fill
// opacity linear in mean_level over [min, max] of the scored regions, regions
// without a score hatched, legend underneath. Output bytes depend only on
// the inputs' content, not their order.
std::string emit_choropleth(std::span<const RegionScore> scores, std::span<const RegionPolygon> regions);

// FeatureCollection with properties {region_id, n, mean_level}; unscored
// regions carry n = 0 and mean_level = null.
std::string scores_to_geojson(std::span<const RegionScore> scores, std::span<const RegionPolygon> regions);

// Line chart of mean absolute error against the sampling parameter, one
// series per strategy.
std::string error_chart_svg(const BiasVarianceReport& report);

}  // namespace tagmap
