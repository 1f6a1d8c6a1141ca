#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "edgetrack/error.hpp"

namespace edgetrack {

/// Row-major 8-bit grayscale image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  bool empty() const { return width <= 0 || height <= 0; }
};

namespace detail {

inline std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

inline void write_binary_file(const std::string& path,
                              const std::vector<std::uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path);
}

// Skips PGM whitespace and '#' comments, then reads one unsigned integer.
inline int pgm_next_int(const std::vector<std::uint8_t>& d, std::size_t& pos) {
  while (pos < d.size()) {
    if (d[pos] == '#') {
      while (pos < d.size() && d[pos] != '\n') ++pos;
    } else if (std::isspace(d[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= d.size() || !std::isdigit(d[pos]))
    fail(ErrorCode::ParseError, "malformed PGM header");
  int v = 0;
  while (pos < d.size() && std::isdigit(d[pos])) {
    v = v * 10 + (d[pos] - '0');
    ++pos;
  }
  return v;
}

inline void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32_be(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void png_append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                             const std::uint8_t* data, std::size_t len) {
  put_u32_be(out, static_cast<std::uint32_t>(len));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  if (len > 0) out.insert(out.end(), data, data + len);
  const auto crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + len));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval 255)

inline GrayImage decode_pgm(const std::vector<std::uint8_t>& data) {
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5')
    fail(ErrorCode::ParseError, "not a binary PGM (P5) file");
  std::size_t pos = 2;
  const int w = detail::pgm_next_int(data, pos);
  const int h = detail::pgm_next_int(data, pos);
  const int maxval = detail::pgm_next_int(data, pos);
  if (w <= 0 || h <= 0) fail(ErrorCode::ParseError, "bad PGM dimensions");
  if (maxval != 255) fail(ErrorCode::ParseError, "PGM maxval must be 255");
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (data.size() < pos + n) fail(ErrorCode::ParseError, "truncated PGM data");
  GrayImage img(w, h);
  std::memcpy(img.pixels.data(), data.data() + pos, n);
  return img;
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

// ---------------------------------------------------------------------------
// PNG (8-bit grayscale only)

inline std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  std::vector<std::uint8_t> out(sig, sig + 8);

  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(img.width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(img.width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(img.width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(img.width);
  ihdr[4] = static_cast<std::uint8_t>(img.height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(img.height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(img.height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(img.height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 0;   // color type: grayscale
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter method
  ihdr[12] = 0;  // no interlace
  detail::png_append_chunk(out, "IHDR", ihdr, sizeof(ihdr));

  // Filter type 0 on every scanline.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (img.width + 1));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), img.pixels.begin() + static_cast<std::size_t>(y) * img.width,
               img.pixels.begin() + static_cast<std::size_t>(y + 1) * img.width);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    fail(ErrorCode::IoError, "zlib compression failed");
  detail::png_append_chunk(out, "IDAT", comp.data(), comp_len);
  detail::png_append_chunk(out, "IEND", nullptr, 0);
  return out;
}

inline GrayImage decode_png(const std::vector<std::uint8_t>& data) {
  static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  if (data.size() < 8 || std::memcmp(data.data(), sig, 8) != 0)
    fail(ErrorCode::ParseError, "not a PNG file");

  int w = 0, h = 0;
  bool have_ihdr = false;
  std::vector<std::uint8_t> idat;
  std::size_t pos = 8;
  while (pos + 12 <= data.size()) {
    const std::uint32_t len = detail::get_u32_be(data.data() + pos);
    if (pos + 12 + len > data.size())
      fail(ErrorCode::ParseError, "truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(data.data() + pos + 4);
    const std::uint8_t* payload = data.data() + pos + 8;
    const std::uint32_t stored_crc = detail::get_u32_be(payload + len);
    const auto crc = crc32(0L, data.data() + pos + 4, 4 + len);
    if (static_cast<std::uint32_t>(crc) != stored_crc)
      fail(ErrorCode::ParseError, "PNG chunk CRC mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail(ErrorCode::ParseError, "bad IHDR length");
      w = static_cast<int>(detail::get_u32_be(payload));
      h = static_cast<int>(detail::get_u32_be(payload + 4));
      if (payload[8] != 8 || payload[9] != 0)
        fail(ErrorCode::ParseError, "only 8-bit grayscale PNG is supported");
      if (payload[12] != 0)
        fail(ErrorCode::ParseError, "interlaced PNG is not supported");
      have_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + len;
  }
  if (!have_ihdr || w <= 0 || h <= 0)
    fail(ErrorCode::ParseError, "missing or bad IHDR");

  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<std::uint8_t> raw(stride * h);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size())
    fail(ErrorCode::ParseError, "PNG inflate failed");

  GrayImage img(w, h);
  std::vector<std::uint8_t> prior(static_cast<std::size_t>(w), 0);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t filter = raw[static_cast<std::size_t>(y) * stride];
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * stride + 1;
    std::uint8_t* dst = img.pixels.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const int cur = src[x];
      const int left = x > 0 ? dst[x - 1] : 0;
      const int up = prior[x];
      const int up_left = x > 0 ? prior[x - 1] : 0;
      int v;
      switch (filter) {
        case 0: v = cur; break;
        case 1: v = cur + left; break;
        case 2: v = cur + up; break;
        case 3: v = cur + (left + up) / 2; break;
        case 4: v = cur + detail::paeth(left, up, up_left); break;
        default: fail(ErrorCode::ParseError, "unknown PNG filter type");
      }
      dst[x] = static_cast<std::uint8_t>(v & 0xff);
    }
    std::memcpy(prior.data(), dst, static_cast<std::size_t>(w));
  }
  return img;
}

// ---------------------------------------------------------------------------
// Path-level helpers

inline GrayImage load_image(const std::string& path) {
  const auto data = detail::read_binary_file(path);
  if (data.size() >= 2 && data[0] == 'P' && data[1] == '5') return decode_pgm(data);
  return decode_png(data);
}

inline void save_image(const std::string& path, const GrayImage& img) {
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".pgm")
    detail::write_binary_file(path, encode_pgm(img));
  else if (ext == ".png")
    detail::write_binary_file(path, encode_png(img));
  else
    fail(ErrorCode::IoError, "unsupported image extension: " + ext);
}

/// Lists frame_* image files in a directory, sorted by filename.
inline std::vector<std::string> list_frames(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(ErrorCode::IoError, dir + " is not a directory");
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    const auto ext = e.path().extension().string();
    if (name.rfind("frame_", 0) == 0 && (ext == ".pgm" || ext == ".png"))
      out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace edgetrack
