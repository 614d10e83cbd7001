#include "tagmap/config.hpp"

#include "tagmap/error.hpp"
#include "tagmap/io.hpp"
#include "tagmap/metrics.hpp"
#include "tagmap/sampling.hpp"

namespace tagmap {

namespace {

using nlohmann::json;

bool compatible(const json& def, const json& value) {
  if (def.is_null()) return true;  // nullable slot: any scalar or object
  if (value.is_null()) return false;
  if (def.is_number()) return value.is_number();
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_string()) return value.is_string();
  if (def.is_array()) return value.is_array();
  if (def.is_object()) return value.is_object();
  return false;
}

void merge_into(json& target, const json& schema, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + full + "'");
    const json& def = schema[key];
    if (def.is_object() && !def.empty()) {
      merge_into(target[key], def, value, full);
      continue;
    }
    if (!compatible(def, value)) {
      throw Error(ErrorCode::InvalidConfig, "config key '" + full + "' has the wrong type");
    }
    target[key] = value;
  }
}

json::json_pointer pointer(std::string_view dotted) {
  std::string p;
  std::size_t start = 0;
  while (start <= dotted.size()) {
    auto end = dotted.find('.', start);
    if (end == std::string_view::npos) end = dotted.size();
    p += "/";
    p += dotted.substr(start, end - start);
    start = end + 1;
  }
  return json::json_pointer(p);
}

}  // namespace

const nlohmann::json& PipelineConfig::defaults() {
  static const json d = json::parse(R"({
    "region": null,
    "regions": null,
    "plan": null,
    "manifest": null,
    "detections": null,
    "truth": null,
    "out": null,
    "strategy": "systematic",
    "spacing_m": 102,
    "anchor": null,
    "n_random": 0,
    "seed": 0,
    "k": 4,
    "fov_deg": 90,
    "width_px": 640,
    "height_px": 640,
    "tau": 0.5,
    "mode": "fraction",
    "dedup": "union",
    "iou_threshold": 0.5,
    "provider": {
      "kind": "simulated",
      "seed": 0,
      "external_fraction": 0.0,
      "unmapped_fraction": 0.0,
      "external_zones": null,
      "unmapped_zones": null,
      "blob_dir": null,
      "root": null,
      "base_url": null,
      "rate_per_s": null,
      "workers": 8
    },
    "detector": {
      "kind": "synthetic",
      "seed": 0,
      "dir": null,
      "url": null,
      "max_regions": 3,
      "tagged_fraction": 0.6,
      "workers": 8
    },
    "simulate": {
      "field_seed": 1,
      "bumps": 2,
      "min_sigma_m": 600,
      "max_sigma_m": 1500,
      "spacings_m": [400, 200, 100],
      "n_random": [125, 500],
      "runs": 200,
      "anchor_mode": "corner"
    }
  })");
  return d;
}

PipelineConfig::PipelineConfig() : doc_(defaults()) {}

void PipelineConfig::merge(const nlohmann::json& overlay) { merge_into(doc_, defaults(), overlay, ""); }

void PipelineConfig::merge_file(const std::filesystem::path& path) {
  json overlay;
  try {
    overlay = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  merge(overlay);
}

void PipelineConfig::set_value(std::string_view dotted_key, nlohmann::json value) {
  json overlay = json::object();
  overlay[pointer(dotted_key)] = std::move(value);
  merge(overlay);
}

void PipelineConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + std::string(assignment) + "'");
  }
  const auto key = assignment.substr(0, eq);
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  set_value(key, std::move(value));
}

const nlohmann::json& PipelineConfig::at(std::string_view dotted_key) const {
  const auto ptr = pointer(dotted_key);
  if (!doc_.contains(ptr)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(dotted_key) + "'");
  return doc_.at(ptr);
}

std::string PipelineConfig::str(std::string_view key) const {
  const auto& v = at(key);
  if (!v.is_string()) throw Error(ErrorCode::InvalidConfig, "config key '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> PipelineConfig::opt_str(std::string_view key) const {
  const auto& v = at(key);
  if (v.is_null()) return std::nullopt;
  return str(key);
}

double PipelineConfig::num(std::string_view key) const {
  const auto& v = at(key);
  if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, "config key '" + std::string(key) + "' must be a number");
  return v.get<double>();
}

std::uint64_t PipelineConfig::uint(std::string_view key) const {
  const auto& v = at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw Error(ErrorCode::InvalidConfig, "config key '" + std::string(key) + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::filesystem::path PipelineConfig::path(std::string_view key) const {
  const auto v = opt_str(key);
  if (!v || v->empty()) throw Error(ErrorCode::InvalidConfig, "missing required setting '" + std::string(key) + "'");
  return *v;
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  parse_strategy(str("strategy"));
  parse_level_mode(str("mode"));
  parse_dedup(str("dedup"));
  require(num("spacing_m") > 0, "spacing_m must be positive");
  require(uint("k") >= 1, "k must be at least 1");
  require(num("fov_deg") > 0 && num("fov_deg") <= 120, "fov_deg must be in (0, 120]");
  require(uint("width_px") > 0 && uint("height_px") > 0, "image size must be positive");
  require(num("tau") >= 0 && num("tau") <= 1, "tau must be in [0, 1]");
  require(num("iou_threshold") > 0 && num("iou_threshold") <= 1, "iou_threshold must be in (0, 1]");
  uint("n_random");
  uint("seed");
  const auto pk = str("provider.kind");
  require(pk == "simulated" || pk == "directory" || pk == "http", "provider.kind must be simulated|directory|http");
  const auto dk = str("detector.kind");
  require(dk == "synthetic" || dk == "file" || dk == "remote", "detector.kind must be synthetic|file|remote");
  require(uint("provider.workers") >= 1 && uint("detector.workers") >= 1, "workers must be at least 1");
  for (const char* f : {"provider.external_fraction", "provider.unmapped_fraction", "detector.tagged_fraction"}) {
    require(num(f) >= 0 && num(f) <= 1, std::string(f) + " must be in [0, 1]");
  }
  const auto am = str("simulate.anchor_mode");
  require(am == "corner" || am == "random_start", "simulate.anchor_mode must be corner|random_start");
  require(num("simulate.min_sigma_m") > 0 && num("simulate.max_sigma_m") >= num("simulate.min_sigma_m"),
          "simulate sigma range invalid");
}

std::string PipelineConfig::hash() const { return sha256_hex(doc_.dump()); }

}  // namespace tagmap
