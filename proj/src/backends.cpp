#include "tagmap/backends.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tagmap/error.hpp"
#include "tagmap/io.hpp"

namespace tagmap {

FileBackend::FileBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

DetectionSet FileBackend::detect(const ImageRef& image) {
  const auto path = detection_file(dir_, image.image_id);
  if (!std::filesystem::exists(path)) return {image.image_id, "file", {}};
  DetectionSet set = detection_set_from_json(read_file(path));
  if (set.image_id != image.image_id) {
    throw Error(ErrorCode::BackendError, path.string() + " holds detections for " + set.image_id);
  }
  if (image.dims.area() > 0) validate_set(set, image.dims);
  return set;
}

SyntheticBackend::SyntheticBackend(SyntheticBackendConfig config) : config_(std::move(config)) {}

DetectionSet SyntheticBackend::generate(const ImageRef& image) const {
  DetectionSet set{image.image_id, config_.detector_id, {}};
  const unsigned W = image.dims.width;
  const unsigned H = image.dims.height;
  if (W < 8 || H < 8 || config_.max_regions == 0) return set;

  std::mt19937_64 rng(fnv1a64(image.image_id, config_.seed ^ 0x9e3779b97f4a7c15ULL));
  if (uniform01(rng) >= config_.tagged_fraction) return set;

  auto uniform_int = [&](long lo, long hi) {  // inclusive
    if (hi <= lo) return lo;
    return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const unsigned count = 1 + static_cast<unsigned>(rng() % config_.max_regions);
  for (unsigned i = 0; i < count; ++i) {
    const long w = uniform_int(std::min<long>(16, W / 2), std::max<long>(8, W / 3));
    const long h = uniform_int(std::min<long>(12, H / 2), std::max<long>(8, H / 4));
    const long x0 = uniform_int(0, static_cast<long>(W) - w);
    const long y0 = uniform_int(0, static_cast<long>(H) - h);
    // Shear the top edge sideways without leaving the image.
    long shift = uniform_int(-w / 4, w / 4);
    shift = std::clamp(shift, -x0, static_cast<long>(W) - (x0 + w));
    DetectionRegion region;
    region.polygon = {{double(x0), double(y0 + h)},
                      {double(x0 + w), double(y0 + h)},
                      {double(x0 + w + shift), double(y0)},
                      {double(x0 + shift), double(y0)}};
    region.confidence = std::round((0.05 + 0.949 * uniform01(rng)) * 1000.0) / 1000.0;
    const bool duplicate = std::any_of(set.regions.begin(), set.regions.end(),
                                       [&](const DetectionRegion& r) { return r.polygon == region.polygon; });
    if (!duplicate) set.regions.push_back(std::move(region));
  }
  return set;
}

DetectionSet SyntheticBackend::detect(const ImageRef& image) { return generate(image); }

std::vector<GroundTruthRegion> SyntheticBackend::ground_truth(const ImageRef& image) const {
  return truths_from_set(generate(image));
}

}  // namespace tagmap
