#include "lfkit/image.hpp"

#include <fmt/format.h>
#include <png.h>

#include <cctype>
#include <cstring>

#include "lfkit/core.hpp"
#include "lfkit/dataset_io.hpp"

namespace lfkit {

GrayImage to_gray(const Raster& raster) {
  GrayImage out(raster.width, raster.height);
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;
  if (raster.channels == 1) {
    out.pixels.assign(raster.data.begin(), raster.data.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto* px = &raster.data[i * 3];
    out.pixels[i] = luminance(px[0], px[1], px[2]);
  }
  return out;
}

namespace {

[[noreturn]] void undecodable(std::string_view name, std::string_view why) {
  throw Error(ErrorKind::undecodable_image, fmt::format("cannot decode {}: {}", name, why));
}

// Portable any-map reader: P2/P3 (ASCII) and P5/P6 (binary), maxval <= 255.
Raster decode_pnm(std::string_view bytes, std::string_view name) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      undecodable(name, "truncated header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1'000'000) undecodable(name, "header value out of range");
    }
    return v;
  };
  const char kind = bytes[1];
  Raster r;
  r.channels = (kind == '3' || kind == '6') ? 3 : 1;
  r.width = static_cast<int>(next_token());
  r.height = static_cast<int>(next_token());
  const long maxval = next_token();
  if (r.width <= 0 || r.height <= 0) undecodable(name, "empty raster");
  if (maxval <= 0 || maxval > 255) undecodable(name, "only 8-bit maxval is supported");
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height * r.channels;
  r.data.resize(n);
  if (kind == '5' || kind == '6') {
    ++pos;  // single whitespace byte after maxval
    if (bytes.size() < pos + n) undecodable(name, "truncated pixel data");
    std::memcpy(r.data.data(), bytes.data() + pos, n);
  } else {
    for (std::size_t i = 0; i < n; ++i) r.data[i] = static_cast<std::uint8_t>(next_token());
  }
  if (maxval != 255) {
    for (auto& v : r.data) v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return r;
}

Raster decode_png(std::string_view bytes, std::string_view name) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    undecodable(name, img.message);
  }
  Raster r;
  r.width = static_cast<int>(img.width);
  r.height = static_cast<int>(img.height);
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  r.channels = color ? 3 : 1;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  r.data.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, r.data.data(), 0, nullptr)) {
    const std::string why = img.message;
    png_image_free(&img);
    undecodable(name, why);
  }
  return r;
}

}  // namespace

Raster decode_image_bytes(std::string_view bytes, std::string_view name) {
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0) {
    return decode_png(bytes, name);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' &&
      (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, name);
  }
  undecodable(name, "unrecognised format");
}

Raster decode_image(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const Error&) {
    undecodable(path.string(), "unreadable file");
  }
  return decode_image_bytes(bytes, path.string());
}

GrayImage load_gray(const std::filesystem::path& path, bool strict) {
  auto gray = to_gray(decode_image(path));
  if (strict && (gray.width != kCropWidth || gray.height != kCropHeight)) {
    throw Error(ErrorKind::wrong_dimensions,
                fmt::format("{} is {}x{}, expected {}x{}", path.string(), gray.width, gray.height,
                            kCropWidth, kCropHeight));
  }
  return gray;
}

std::string encode_pgm(const GrayImage& image) {
  std::string out = fmt::format("P5\n{} {}\n255\n", image.width, image.height);
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

void save_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_file(path, encode_pgm(image));
}

void save_png(const std::filesystem::path& path, const Raster& raster) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(raster.width);
  img.height = static_cast<png_uint_32>(raster.height);
  img.format = raster.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, raster.data.data(), 0, nullptr)) {
    throw Error(ErrorKind::io_error, fmt::format("cannot write {}: {}", path.string(), img.message));
  }
}

}  // namespace lfkit
