#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tagmap {

inline constexpr const char* kGraffitiLabel = "graffiti-tag";
inline constexpr double kDefaultTau = 0.5;

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

using PixelRing = std::vector<PixelPoint>;

struct ImageDims {
  unsigned width = 0;
  unsigned height = 0;
  std::uint64_t area() const noexcept { return std::uint64_t{width} * height; }
  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct DetectionRegion {
  PixelRing polygon;
  double confidence = 1.0;
  std::string label = kGraffitiLabel;
  friend bool operator==(const DetectionRegion&, const DetectionRegion&) = default;
};

struct DetectionSet {
  std::string image_id;
  std::string detector_id;
  std::vector<DetectionRegion> regions;
  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

// Throws InvalidArgument for < 3 vertices, confidence outside [0, 1], or a
// vertex outside [0, width] x [0, height].
void validate_region(const DetectionRegion& region, const ImageDims& dims);
void validate_set(const DetectionSet& set, const ImageDims& dims);

// |shoelace| / 2, independent of winding.
double polygon_area_px(std::span<const PixelPoint> ring) noexcept;
double polygon_area_px(const DetectionRegion& region) noexcept;

// One byte per pixel. A pixel is covered when its centre lies inside the
// polygon under the even-odd rule.
class Bitmask {
 public:
  explicit Bitmask(ImageDims dims) : dims_(dims), bits_(dims.area(), 0) {}

  void fill_polygon(std::span<const PixelPoint> ring);
  std::uint64_t count() const noexcept;
  std::uint64_t count_and(const Bitmask& other) const;
  std::uint64_t count_or(const Bitmask& other) const;
  bool at(unsigned x, unsigned y) const { return bits_[std::size_t{y} * dims_.width + x] != 0; }
  const ImageDims& dims() const noexcept { return dims_; }

 private:
  ImageDims dims_;
  std::vector<std::uint8_t> bits_;
};

// Area of the union, rasterized at 1 px.
double union_area_px(std::span<const DetectionRegion> regions, const ImageDims& dims);

// Keeps regions with confidence >= tau, preserving order.
DetectionSet filter_by_confidence(const DetectionSet& set, double tau);

void to_json(nlohmann::json& j, const DetectionSet& s);
// "confidence" is optional (ground-truth files omit it) and defaults to 1.
void from_json(const nlohmann::json& j, DetectionSet& s);

std::string detection_set_to_json(const DetectionSet& set);
DetectionSet detection_set_from_json(const std::string& text);

std::filesystem::path detection_file(const std::filesystem::path& dir, std::string_view image_id);
void save_detection_set(const DetectionSet& set, const std::filesystem::path& dir);

}  // namespace tagmap
