#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace tagmap {

// Pipeline configuration: a JSON document whose shape is fixed by the
// defaults. Layers merge in order defaults < config file < --set < flags;
// keys absent from the defaults and values of the wrong type are rejected
// with InvalidConfig.
class PipelineConfig {
 public:
  PipelineConfig();

  static const nlohmann::json& defaults();

  void merge(const nlohmann::json& overlay);
  void merge_file(const std::filesystem::path& path);
  // "provider.seed=7"; the value is parsed as JSON, falling back to a string.
  void set(std::string_view assignment);
  void set_value(std::string_view dotted_key, nlohmann::json value);

  const nlohmann::json& at(std::string_view dotted_key) const;
  std::string str(std::string_view key) const;
  std::optional<std::string> opt_str(std::string_view key) const;
  double num(std::string_view key) const;
  std::uint64_t uint(std::string_view key) const;

  // Path-valued key; throws InvalidConfig when unset.
  std::filesystem::path path(std::string_view key) const;

  // Checks cross-field constraints (ranges, enums).
  void validate() const;

  const nlohmann::json& doc() const noexcept { return doc_; }
  std::string hash() const;

 private:
  nlohmann::json doc_;
};

}  // namespace tagmap
