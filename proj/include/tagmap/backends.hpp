#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tagmap/detection.hpp"
#include "tagmap/evaluation.hpp"

namespace tagmap {

struct ImageRef {
  std::string image_id;
  std::string storage_ref;
  ImageDims dims;
};

// Graffiti segmentation source. detect() must be safe to call concurrently
// for distinct images and deterministic for a fixed configuration.
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual DetectionSet detect(const ImageRef& image) = 0;
};

// Precomputed <image_id>.json files; an image without a file has no detections.
class FileBackend final : public DetectorBackend {
 public:
  explicit FileBackend(std::filesystem::path dir);
  DetectionSet detect(const ImageRef& image) override;

 private:
  std::filesystem::path dir_;
};

// Client of the detector service: POST /detect with {image: base64, width,
// height}; the response body is a DetectionSet document. Non-200 responses
// and transport errors throw BackendError.
class RemoteBackend final : public DetectorBackend {
 public:
  explicit RemoteBackend(std::string base_url, double timeout_s = 60.0);
  DetectionSet detect(const ImageRef& image) override;

 private:
  std::string base_url_;
  double timeout_s_;
};

struct SyntheticBackendConfig {
  std::uint64_t seed = 0;
  std::string detector_id = "synthetic";
  unsigned max_regions = 3;
  // Probability that an image has any tagging at all.
  double tagged_fraction = 0.6;
};

// Seeded generator of axis-aligned and skewed quadrilateral regions. The same
// polygons are exposed as ground truth, so evaluating the backend against its
// own truth scores perfectly.
class SyntheticBackend final : public DetectorBackend {
 public:
  explicit SyntheticBackend(SyntheticBackendConfig config = {});
  DetectionSet detect(const ImageRef& image) override;
  std::vector<GroundTruthRegion> ground_truth(const ImageRef& image) const;

 private:
  DetectionSet generate(const ImageRef& image) const;

  SyntheticBackendConfig config_;
};

}  // namespace tagmap
