#include "tagmap/image.hpp"

#include <vector>

#include <zlib.h>

#include "tagmap/error.hpp"

namespace tagmap {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out += static_cast<char>((v >> 24) & 0xff);
  out += static_cast<char>((v >> 16) & 0xff);
  out += static_cast<char>((v >> 8) & 0xff);
  out += static_cast<char>(v & 0xff);
}

void put_chunk(std::string& out, const char* type, std::string_view data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body.append(data);
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

std::uint32_t be32(std::string_view b, std::size_t at) {
  return (std::uint32_t{static_cast<unsigned char>(b[at])} << 24) |
         (std::uint32_t{static_cast<unsigned char>(b[at + 1])} << 16) |
         (std::uint32_t{static_cast<unsigned char>(b[at + 2])} << 8) |
         std::uint32_t{static_cast<unsigned char>(b[at + 3])};
}

unsigned be16(std::string_view b, std::size_t at) {
  return (unsigned{static_cast<unsigned char>(b[at])} << 8) | unsigned{static_cast<unsigned char>(b[at + 1])};
}

}  // namespace

std::string encode_png_gray(unsigned width, unsigned height, std::uint8_t shade) {
  // Each scanline: filter byte 0 then the row.
  std::vector<unsigned char> raw(static_cast<std::size_t>(width + 1) * height, shade);
  for (unsigned y = 0; y < height; ++y) raw[static_cast<std::size_t>(y) * (width + 1)] = 0;
  uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> packed(packed_len);
  if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error(ErrorCode::Io, "PNG compression failed");
  }

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, width);
  put_u32(ihdr, height);
  ihdr += '\x08';  // bit depth
  ihdr += '\x00';  // grayscale
  ihdr += std::string(3, '\0');
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", std::string_view(reinterpret_cast<const char*>(packed.data()), packed_len));
  put_chunk(png, "IEND", {});
  return png;
}

std::optional<ImageDims> image_dimensions(std::string_view b) {
  if (b.size() >= 24 && b.substr(0, 8) == std::string_view("\x89PNG\r\n\x1a\n", 8) && b.substr(12, 4) == "IHDR") {
    return ImageDims{be32(b, 16), be32(b, 20)};
  }
  if (b.size() >= 4 && static_cast<unsigned char>(b[0]) == 0xFF && static_cast<unsigned char>(b[1]) == 0xD8) {
    std::size_t i = 2;
    while (i + 9 < b.size()) {
      if (static_cast<unsigned char>(b[i]) != 0xFF) return std::nullopt;
      const auto marker = static_cast<unsigned char>(b[i + 1]);
      if (marker == 0xFF) {
        ++i;
        continue;
      }
      const unsigned len = be16(b, i + 2);
      const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
      if (sof) return ImageDims{be16(b, i + 7), be16(b, i + 5)};
      i += 2 + len;
    }
  }
  return std::nullopt;
}

}  // namespace tagmap
