// HTTP-facing implementations: the generic imagery provider and the remote
// detector backend.
#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tagmap/backends.hpp"
#include "tagmap/error.hpp"
#include "tagmap/image.hpp"
#include "tagmap/io.hpp"
#include "tagmap/providers.hpp"

namespace tagmap {

namespace {

httplib::Client make_client(const std::string& base_url, double timeout_s) {
  httplib::Client cli(base_url);
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  return cli;
}

httplib::Params view_params(const ViewRequest& view, const GeoPoint& at, const std::string& key) {
  return {{"lat", fmt::format("{}", at.lat())},   {"lon", fmt::format("{}", at.lon())},
          {"heading", fmt::format("{}", view.heading_deg)}, {"fov", fmt::format("{}", view.fov_deg)},
          {"w", std::to_string(view.width_px)},   {"h", std::to_string(view.height_px)},
          {"key", key}};
}

ImageRecord blank_record(const ViewRequest& view, ImageStatus status) {
  ImageRecord r;
  r.image_id = make_image_id(view.point_id, view.heading_deg);
  r.point_id = view.point_id;
  r.heading_deg = view.heading_deg;
  r.status = status;
  return r;
}

void check_auth(int status) {
  if (status == 401 || status == 403) {
    throw Error(ErrorCode::ProviderAuth, fmt::format("provider rejected credentials (HTTP {})", status));
  }
}

}  // namespace

HttpProvider::HttpProvider(HttpProviderOptions opts, std::string api_key)
    : opts_(std::move(opts)), api_key_(std::move(api_key)) {
  if (opts_.base_url.empty()) throw Error(ErrorCode::InvalidArgument, "HTTP provider needs a base URL");
}

HttpProvider HttpProvider::from_env(HttpProviderOptions opts) {
  const char* key = std::getenv(kProviderKeyEnv);
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::ProviderAuth, std::string(kProviderKeyEnv) + " is not set");
  }
  return HttpProvider(std::move(opts), key);
}

ImageRecord HttpProvider::fetch(const ViewRequest& view, const GeoPoint& at) {
  auto cli = make_client(opts_.base_url, opts_.timeout_s);
  auto res = cli.Get(opts_.image_path, view_params(view, at, api_key_), httplib::Headers{});
  if (!res) return blank_record(view, ImageStatus::Failed);
  check_auth(res->status);
  if (res->status != 200) return blank_record(view, ImageStatus::Failed);
  if (res->body.empty()) return blank_record(view, ImageStatus::Unmapped);

  ImageRecord r = blank_record(view, ImageStatus::Ok);
  if (res->has_header("X-Capture-Year")) {
    try {
      r.capture_year = std::stoi(res->get_header_value("X-Capture-Year"));
    } catch (const std::exception&) {
      r.capture_year.reset();
    }
  }
  if (res->get_header_value("X-Provider") == "external") r.provider = ProviderKind::External;

  const auto dims = image_dimensions(res->body);
  r.width_px = dims ? dims->width : view.width_px;
  r.height_px = dims ? dims->height : view.height_px;
  const bool png = res->body.size() >= 4 && res->body.compare(1, 3, "PNG") == 0;
  const auto path = opts_.blob_dir / (r.image_id + (png ? ".png" : ".jpg"));
  write_file_atomic(path, res->body);
  r.storage_ref = path.string();
  return r;
}

ImageRecord HttpProvider::probe(const ViewRequest& view, const GeoPoint& at) {
  auto cli = make_client(opts_.base_url, opts_.timeout_s);
  auto res = cli.Get(opts_.metadata_path, view_params(view, at, api_key_), httplib::Headers{});
  if (!res) return blank_record(view, ImageStatus::Failed);
  check_auth(res->status);
  if (res->status != 200) return blank_record(view, ImageStatus::Failed);
  try {
    const auto meta = nlohmann::json::parse(res->body);
    const auto status = meta.value("status", std::string("ok"));
    ImageRecord r = blank_record(view, status == "ok" ? ImageStatus::Ok : ImageStatus::Unmapped);
    if (meta.contains("capture_year") && !meta["capture_year"].is_null()) {
      r.capture_year = meta["capture_year"].get<int>();
    }
    if (meta.value("provider", std::string("first_party")) == "external") r.provider = ProviderKind::External;
    return r;
  } catch (const nlohmann::json::exception&) {
    return blank_record(view, ImageStatus::Failed);
  }
}

RemoteBackend::RemoteBackend(std::string base_url, double timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
  if (base_url_.empty()) throw Error(ErrorCode::InvalidArgument, "remote backend needs a base URL");
}

DetectionSet RemoteBackend::detect(const ImageRef& image) {
  std::string bytes;
  try {
    bytes = read_file(image.storage_ref);
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendError, "image " + image.image_id + " has no readable payload: " + e.what());
  }
  const nlohmann::json body = {
      {"image", base64_encode(bytes)}, {"width", image.dims.width}, {"height", image.dims.height}};
  auto cli = make_client(base_url_, timeout_s_);
  auto res = cli.Post("/detect", body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BackendError, "detector service unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BackendError, fmt::format("detector service returned HTTP {}", res->status));
  }
  DetectionSet set;
  try {
    set = detection_set_from_json(res->body);
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendError, e.what());
  }
  // The service only sees pixels, so the caller's id is authoritative.
  set.image_id = image.image_id;
  validate_set(set, image.dims);
  return set;
}

}  // namespace tagmap
