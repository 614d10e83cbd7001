#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace tagmap {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Splits on '\n', dropping empty lines and a trailing '\r'.
std::vector<std::string_view> split_lines(std::string_view text);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string sha256_hex(std::string_view data);

// Uniform double in [0, 1) built from the top 53 bits, so streams are
// identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace tagmap
