#include "tagmap/detection.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "tagmap/error.hpp"
#include "tagmap/io.hpp"

namespace tagmap {

void validate_region(const DetectionRegion& region, const ImageDims& dims) {
  if (region.polygon.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "detection polygon needs at least 3 vertices");
  }
  if (!(region.confidence >= 0.0 && region.confidence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence outside [0, 1]");
  }
  for (const auto& p : region.polygon) {
    if (!(p.x >= 0.0 && p.x <= dims.width && p.y >= 0.0 && p.y <= dims.height)) {
      throw Error(ErrorCode::InvalidArgument, "vertex (" + std::to_string(p.x) + ", " +
                                                  std::to_string(p.y) + ") outside image bounds");
    }
  }
}

void validate_set(const DetectionSet& set, const ImageDims& dims) {
  for (const auto& r : set.regions) validate_region(r, dims);
}

double polygon_area_px(std::span<const PixelPoint> ring) noexcept {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice) / 2.0;
}

double polygon_area_px(const DetectionRegion& region) noexcept {
  return polygon_area_px(region.polygon);
}

void Bitmask::fill_polygon(std::span<const PixelPoint> ring) {
  const std::size_t n = ring.size();
  if (n < 3 || dims_.width == 0 || dims_.height == 0) return;

  double min_y = ring[0].y;
  double max_y = ring[0].y;
  for (const auto& p : ring) {
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const long row_lo = std::max(0L, static_cast<long>(std::floor(min_y - 0.5)));
  const long row_hi = std::min(static_cast<long>(dims_.height) - 1, static_cast<long>(std::ceil(max_y)));

  std::vector<double> xs;
  for (long row = row_lo; row <= row_hi; ++row) {
    const double yc = static_cast<double>(row) + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = ring[i];
      const auto& b = ring[(i + 1) % n];
      if ((a.y > yc) != (b.y > yc)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    auto* line = bits_.data() + static_cast<std::size_t>(row) * dims_.width;
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
      // Pixel centres c = col + 0.5 with xs[i] <= c < xs[i + 1].
      const long first = std::max(0L, static_cast<long>(std::ceil(xs[i] - 0.5)));
      const long last = std::min(static_cast<long>(dims_.width), static_cast<long>(std::ceil(xs[i + 1] - 0.5)));
      for (long col = first; col < last; ++col) line[col] = 1;
    }
  }
}

std::uint64_t Bitmask::count() const noexcept {
  return static_cast<std::uint64_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::uint64_t Bitmask::count_and(const Bitmask& other) const {
  if (!(dims_ == other.dims_)) throw Error(ErrorCode::InvalidArgument, "mask dimensions differ");
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) c += bits_[i] & other.bits_[i];
  return c;
}

std::uint64_t Bitmask::count_or(const Bitmask& other) const {
  if (!(dims_ == other.dims_)) throw Error(ErrorCode::InvalidArgument, "mask dimensions differ");
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) c += bits_[i] | other.bits_[i];
  return c;
}

double union_area_px(std::span<const DetectionRegion> regions, const ImageDims& dims) {
  if (regions.empty()) return 0.0;
  Bitmask mask(dims);
  for (const auto& r : regions) mask.fill_polygon(r.polygon);
  return static_cast<double>(mask.count());
}

DetectionSet filter_by_confidence(const DetectionSet& set, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau outside [0, 1]");
  DetectionSet out{set.image_id, set.detector_id, {}};
  std::copy_if(set.regions.begin(), set.regions.end(), std::back_inserter(out.regions),
               [tau](const DetectionRegion& r) { return r.confidence >= tau; });
  return out;
}

void to_json(nlohmann::json& j, const DetectionSet& s) {
  auto regions = nlohmann::json::array();
  for (const auto& r : s.regions) {
    auto poly = nlohmann::json::array();
    for (const auto& p : r.polygon) poly.push_back({p.x, p.y});
    regions.push_back({{"polygon", std::move(poly)}, {"confidence", r.confidence}});
  }
  j = {{"image_id", s.image_id}, {"detector_id", s.detector_id}, {"regions", std::move(regions)}};
}

void from_json(const nlohmann::json& j, DetectionSet& s) {
  s.image_id = j.at("image_id").get<std::string>();
  s.detector_id = j.value("detector_id", std::string{});
  s.regions.clear();
  for (const auto& r : j.at("regions")) {
    DetectionRegion region;
    for (const auto& p : r.at("polygon")) {
      region.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    region.confidence = r.value("confidence", 1.0);
    s.regions.push_back(std::move(region));
  }
}

std::string detection_set_to_json(const DetectionSet& set) {
  return nlohmann::json(set).dump() + "\n";
}

DetectionSet detection_set_from_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<DetectionSet>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("DetectionSet: ") + e.what());
  }
}

std::filesystem::path detection_file(const std::filesystem::path& dir, std::string_view image_id) {
  return dir / (std::string(image_id) + ".json");
}

void save_detection_set(const DetectionSet& set, const std::filesystem::path& dir) {
  write_file_atomic(detection_file(dir, set.image_id), detection_set_to_json(set));
}

}  // namespace tagmap
