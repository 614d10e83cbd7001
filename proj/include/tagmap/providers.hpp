#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tagmap/acquisition.hpp"

namespace tagmap {

inline constexpr const char* kProviderKeyEnv = "TAGMAP_PROVIDER_KEY";

struct SimulatedProviderConfig {
  std::uint64_t seed = 0;
  // Points inside these zones (or listed by point_id) get external or no imagery.
  std::vector<RegionPolygon> external_zones;
  std::vector<RegionPolygon> unmapped_zones;
  std::unordered_set<std::string> external_points;
  std::unordered_set<std::string> unmapped_points;
  // Additional per-point probabilities, decided by a seeded hash of point_id.
  double external_fraction = 0.0;
  double unmapped_fraction = 0.0;
  // Every view fails this many attempts before succeeding.
  unsigned transient_failures = 0;
  // Fail every fetch with ProviderAuth.
  bool reject_auth = false;
  // When set, each ok fetch writes a small PNG here and references it.
  std::optional<std::filesystem::path> blob_dir;
  // Capture-year distribution (weights); one year per point.
  std::map<int, std::uint64_t> year_weights;
};

// Capture-year counts of a 2010-2018 city-wide campaign; the simulator's
// default year distribution.
const std::map<int, std::uint64_t>& reference_year_counts();

// Deterministic provider: identical (config, view) always yields the same record.
class SimulatedProvider final : public ProviderClient {
 public:
  explicit SimulatedProvider(SimulatedProviderConfig config);

  ImageRecord fetch(const ViewRequest& view, const GeoPoint& at) override;
  ImageRecord probe(const ViewRequest& view, const GeoPoint& at) override;

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  ImageRecord describe(const ViewRequest& view, const GeoPoint& at) const;
  double point_hash(std::string_view point_id, std::uint64_t salt) const;

  SimulatedProviderConfig config_;
  std::vector<std::pair<int, std::uint64_t>> cumulative_years_;
  std::uint64_t year_total_ = 0;
  std::atomic<std::size_t> calls_{0};
  std::mutex attempts_mutex_;
  std::unordered_map<std::string, unsigned> attempts_;
};

// Reads a local corpus laid out as <point_id>_<heading>.{jpg,jpeg,png}
// (an optional leading '_' is accepted), with an optional sidecar
// <same stem>.json holding {"capture_year": int, "provider": "first_party"|"external"}.
// Missing files resolve to status unmapped.
class DirectoryProvider final : public ProviderClient {
 public:
  explicit DirectoryProvider(std::filesystem::path root);

  ImageRecord fetch(const ViewRequest& view, const GeoPoint& at) override;
  ImageRecord probe(const ViewRequest& view, const GeoPoint& at) override;

 private:
  ImageRecord lookup(const ViewRequest& view, bool read_pixels) const;

  std::filesystem::path root_;
};

struct HttpProviderOptions {
  std::string base_url;                // e.g. "http://127.0.0.1:8080"
  std::string image_path = "/image";
  std::string metadata_path = "/metadata";
  std::filesystem::path blob_dir = "images";
  double timeout_s = 30.0;
};

// GET <image_path>?lat=&lon=&heading=&fov=&w=&h=&key=. A 200 with a body is
// an image (headers X-Capture-Year and X-Provider carry metadata); a 200 with
// an empty body means no imagery; 401/403 throw ProviderAuth; any other
// status is a failed fetch.
class HttpProvider final : public ProviderClient {
 public:
  HttpProvider(HttpProviderOptions opts, std::string api_key);
  // Reads the key from TAGMAP_PROVIDER_KEY; throws ProviderAuth when unset.
  static HttpProvider from_env(HttpProviderOptions opts);

  ImageRecord fetch(const ViewRequest& view, const GeoPoint& at) override;
  ImageRecord probe(const ViewRequest& view, const GeoPoint& at) override;

 private:
  HttpProviderOptions opts_;
  std::string api_key_;
};

}  // namespace tagmap
