#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tagmap/clock.hpp"
#include "tagmap/geo.hpp"
#include "tagmap/sampling.hpp"

namespace tagmap {

struct YearHistogram;

inline constexpr double kDefaultFovDeg = 90.0;
inline constexpr unsigned kDefaultImageSizePx = 640;
inline constexpr unsigned kDefaultViewsPerPoint = 4;

struct ViewRequest {
  std::string point_id;
  double heading_deg = 0.0;
  double fov_deg = kDefaultFovDeg;
  unsigned width_px = kDefaultImageSizePx;
  unsigned height_px = kDefaultImageSizePx;
};

struct ViewOptions {
  double fov_deg = kDefaultFovDeg;
  unsigned width_px = kDefaultImageSizePx;
  unsigned height_px = kDefaultImageSizePx;
};

// k headings i * 360 / k starting at north. Throws InvalidK for k == 0 and
// InvalidArgument for a field of view outside (0, 120].
std::vector<ViewRequest> plan_views(const SamplePoint& point, unsigned k, const ViewOptions& opts = {});

// Hex digest of point_id and heading; the cache key for a view.
std::string make_image_id(std::string_view point_id, double heading_deg);

enum class ProviderKind { FirstParty, External };
enum class ImageStatus { Ok, Unmapped, Failed };

std::string_view to_string(ProviderKind p);
std::string_view to_string(ImageStatus s);

struct ImageRecord {
  std::string image_id;
  std::string point_id;
  double heading_deg = 0.0;
  std::optional<int> capture_year;
  ProviderKind provider = ProviderKind::FirstParty;
  unsigned width_px = 0;
  unsigned height_px = 0;
  std::string storage_ref;
  ImageStatus status = ImageStatus::Failed;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

void to_json(nlohmann::json& j, const ImageRecord& r);
void from_json(const nlohmann::json& j, ImageRecord& r);

// Append-only record store. When bound to a file, every append is written
// through as one JSON line.
class Manifest {
 public:
  Manifest() = default;

  // Loads an existing JSON Lines manifest (if present) and appends to it.
  static Manifest open(const std::filesystem::path& path);
  static Manifest parse(const std::string& jsonl);

  // Throws DuplicateRecord for a repeated image_id and InvalidArgument when an
  // ok record lacks storage or dimensions.
  void append(ImageRecord record);

  const ImageRecord* find(std::string_view image_id) const;
  const std::vector<ImageRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

  std::string to_jsonl() const;

 private:
  std::vector<ImageRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<std::filesystem::path> path_;
  std::shared_ptr<std::ofstream> sink_;
};

// Street-level imagery source. Implementations must be safe for concurrent
// calls and label third-party imagery as ProviderKind::External.
class ProviderClient {
 public:
  virtual ~ProviderClient() = default;

  // Failed fetches are reported with status Failed; unrecoverable credential
  // problems throw Error(ProviderAuth).
  virtual ImageRecord fetch(const ViewRequest& view, const GeoPoint& at) = 0;
  // Metadata only; storage_ref stays empty.
  virtual ImageRecord probe(const ViewRequest& view, const GeoPoint& at) = 0;
};

struct AcquireOptions {
  unsigned k = kDefaultViewsPerPoint;
  ViewOptions view;
  unsigned workers = 8;
  unsigned max_retries = 3;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;
  double rate_per_s = 10.0;
  // Defaults to a real steady clock when null.
  Clock* clock = nullptr;
};

struct AcquireStats {
  std::size_t client_calls = 0;
  std::size_t fetched = 0;
  std::size_t reused = 0;
  std::size_t failed = 0;
};

// One record per (point, heading). Records already in `store` are reused
// without contacting the client. Per-view failures are retried with
// exponential backoff and then recorded; ProviderAuth aborts the run.
AcquireStats acquire(const SamplePlan& plan, ProviderClient& client, Manifest& store,
                     const AcquireOptions& opts = {});

YearHistogram year_histogram(const Manifest& manifest);

}  // namespace tagmap
