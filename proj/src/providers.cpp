#include "tagmap/providers.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tagmap/error.hpp"
#include "tagmap/image.hpp"
#include "tagmap/io.hpp"

namespace tagmap {

const std::map<int, std::uint64_t>& reference_year_counts() {
  static const std::map<int, std::uint64_t> counts = {
      {2010, 1241}, {2011, 16311}, {2012, 207},   {2013, 422}, {2014, 2182},
      {2015, 4563}, {2016, 4211},  {2017, 39391}, {2018, 317},
  };
  return counts;
}

SimulatedProvider::SimulatedProvider(SimulatedProviderConfig config) : config_(std::move(config)) {
  if (config_.year_weights.empty()) config_.year_weights = reference_year_counts();
  for (const auto& [year, weight] : config_.year_weights) {
    year_total_ += weight;
    cumulative_years_.emplace_back(year, year_total_);
  }
  if (config_.blob_dir) std::filesystem::create_directories(*config_.blob_dir);
}

double SimulatedProvider::point_hash(std::string_view point_id, std::uint64_t salt) const {
  const auto h = fnv1a64(point_id, fnv1a64(fmt::format("{}:{}", config_.seed, salt)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

ImageRecord SimulatedProvider::describe(const ViewRequest& view, const GeoPoint& at) const {
  ImageRecord r;
  r.image_id = make_image_id(view.point_id, view.heading_deg);
  r.point_id = view.point_id;
  r.heading_deg = view.heading_deg;

  const bool unmapped = config_.unmapped_points.contains(view.point_id) ||
                        inside_any(at, config_.unmapped_zones) ||
                        point_hash(view.point_id, 1) < config_.unmapped_fraction;
  if (unmapped) {
    r.status = ImageStatus::Unmapped;
    return r;
  }
  const bool external = config_.external_points.contains(view.point_id) ||
                        inside_any(at, config_.external_zones) ||
                        point_hash(view.point_id, 2) < config_.external_fraction;
  r.provider = external ? ProviderKind::External : ProviderKind::FirstParty;
  if (year_total_ > 0) {
    const auto pick = static_cast<std::uint64_t>(point_hash(view.point_id, 3) * static_cast<double>(year_total_));
    for (const auto& [year, upto] : cumulative_years_) {
      if (pick < upto) {
        r.capture_year = year;
        break;
      }
    }
  }
  r.width_px = view.width_px;
  r.height_px = view.height_px;
  r.status = ImageStatus::Ok;
  return r;
}

ImageRecord SimulatedProvider::fetch(const ViewRequest& view, const GeoPoint& at) {
  ++calls_;
  if (config_.reject_auth) throw Error(ErrorCode::ProviderAuth, "simulated provider rejects credentials");
  ImageRecord r = describe(view, at);
  if (config_.transient_failures > 0) {
    std::lock_guard lock(attempts_mutex_);
    if (attempts_[r.image_id]++ < config_.transient_failures) {
      ImageRecord failed;
      failed.image_id = r.image_id;
      failed.point_id = r.point_id;
      failed.heading_deg = r.heading_deg;
      failed.status = ImageStatus::Failed;
      return failed;
    }
  }
  if (r.status != ImageStatus::Ok) return r;
  if (config_.blob_dir) {
    const auto path = *config_.blob_dir / (r.image_id + ".png");
    if (!std::filesystem::exists(path)) {
      const auto shade = static_cast<std::uint8_t>(fnv1a64(r.image_id, config_.seed) & 0xff);
      write_file_atomic(path, encode_png_gray(r.width_px, r.height_px, shade));
    }
    r.storage_ref = path.string();
  } else {
    r.storage_ref = "sim://" + r.image_id;
  }
  return r;
}

ImageRecord SimulatedProvider::probe(const ViewRequest& view, const GeoPoint& at) {
  ++calls_;
  if (config_.reject_auth) throw Error(ErrorCode::ProviderAuth, "simulated provider rejects credentials");
  return describe(view, at);
}

DirectoryProvider::DirectoryProvider(std::filesystem::path root) : root_(std::move(root)) {
  if (!std::filesystem::is_directory(root_)) {
    throw Error(ErrorCode::InvalidArgument, "image corpus directory not found: " + root_.string());
  }
}

ImageRecord DirectoryProvider::lookup(const ViewRequest& view, bool read_pixels) const {
  ImageRecord r;
  r.image_id = make_image_id(view.point_id, view.heading_deg);
  r.point_id = view.point_id;
  r.heading_deg = view.heading_deg;
  r.status = ImageStatus::Unmapped;

  const std::string stem = fmt::format("{}_{}", view.point_id, view.heading_deg);
  for (const std::string prefix : {"", "_"}) {
    for (const char* ext : {".jpg", ".jpeg", ".png"}) {
      const auto image = root_ / (prefix + stem + ext);
      if (!std::filesystem::is_regular_file(image)) continue;

      const auto sidecar = root_ / (prefix + stem + ".json");
      if (std::filesystem::is_regular_file(sidecar)) {
        try {
          const auto meta = nlohmann::json::parse(read_file(sidecar));
          if (meta.contains("capture_year") && !meta["capture_year"].is_null()) {
            r.capture_year = meta["capture_year"].get<int>();
          }
          if (meta.value("provider", std::string("first_party")) == "external") {
            r.provider = ProviderKind::External;
          }
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::ParseError, sidecar.string() + ": " + e.what());
        }
      }
      if (!read_pixels) {
        r.status = ImageStatus::Ok;
        return r;
      }
      const auto dims = image_dimensions(read_file(image));
      if (!dims || dims->area() == 0) {
        r.status = ImageStatus::Failed;
        return r;
      }
      r.width_px = dims->width;
      r.height_px = dims->height;
      r.storage_ref = std::filesystem::absolute(image).string();
      r.status = ImageStatus::Ok;
      return r;
    }
  }
  return r;
}

ImageRecord DirectoryProvider::fetch(const ViewRequest& view, const GeoPoint&) { return lookup(view, true); }

ImageRecord DirectoryProvider::probe(const ViewRequest& view, const GeoPoint&) { return lookup(view, false); }

}  // namespace tagmap
