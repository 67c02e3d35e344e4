/*
 * Copyright 2026 The locattr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "locattr/errors.hpp"

#if defined(LOCATTR_HAVE_PNG)
#include <png.h>
#endif

namespace locattr {

// 8-bit raster, pixels interleaved row-major (H, W, C). C is 1 or 3.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(std::size_t row, std::size_t col, std::size_t ch) {
    return pixels[(row * width + col) * channels + ch];
  }
  std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels[(row * width + col) * channels + ch];
  }
};

inline bool png_supported() {
#if defined(LOCATTR_HAVE_PNG)
  return true;
#else
  return false;
#endif
}

namespace detail {

inline std::size_t pnm_int(const std::vector<char>& d, std::size_t& pos) {
  while (pos < d.size()) {
    if (d[pos] == '#') {
      while (pos < d.size() && d[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(d[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= d.size() || !std::isdigit(static_cast<unsigned char>(d[pos]))) {
    throw FormatError("malformed PNM header");
  }
  std::size_t v = 0;
  while (pos < d.size() && std::isdigit(static_cast<unsigned char>(d[pos]))) {
    v = v * 10 + static_cast<std::size_t>(d[pos] - '0');
    if (v > (1u << 24)) throw FormatError("PNM dimension too large");
    ++pos;
  }
  return v;
}

}  // namespace detail

// Binary PGM (P5) and PPM (P6) with maxval 255.
inline Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<char> d((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (d.size() < 2 || d[0] != 'P' || (d[1] != '5' && d[1] != '6')) {
    throw FormatError(path + ": not a binary PGM/PPM file");
  }
  Image img;
  img.channels = d[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  img.width = detail::pnm_int(d, pos);
  img.height = detail::pnm_int(d, pos);
  const std::size_t maxval = detail::pnm_int(d, pos);
  if (img.width == 0 || img.height == 0) throw FormatError(path + ": empty image");
  if (maxval != 255) throw FormatError(path + ": only maxval 255 is supported");
  if (pos >= d.size() || !std::isspace(static_cast<unsigned char>(d[pos]))) {
    throw FormatError(path + ": malformed PNM header");
  }
  ++pos;
  const std::size_t n = img.width * img.height * img.channels;
  if (d.size() - pos < n) throw FormatError(path + ": truncated pixel data");
  img.pixels.assign(d.begin() + static_cast<std::ptrdiff_t>(pos),
                    d.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

// Always writes P6; grayscale images are replicated into R, G and B.
inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::uint8_t v = img.pixels[i * img.channels + (img.channels == 3 ? c : 0)];
      out.put(static_cast<char>(v));
    }
  }
  if (!out) throw Error("failed writing " + path);
}

inline Image read_png(const std::string& path) {
#if defined(LOCATTR_HAVE_PNG)
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw FormatError(path + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image img;
  img.width = png.width;
  img.height = png.height;
  img.channels = color ? 3 : 1;
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw FormatError(path + ": " + png.message);
  }
  return img;
#else
  throw FormatError(path + ": built without PNG support");
#endif
}

inline void write_png(const Image& img, const std::string& path) {
#if defined(LOCATTR_HAVE_PNG)
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    throw Error(path + ": " + png.message);
  }
#else
  (void)img;
  throw Error(path + ": built without PNG support");
#endif
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[s.size() - suffix.size() + i])) !=
        std::tolower(static_cast<unsigned char>(suffix[i]))) {
      return false;
    }
  }
  return true;
}

// Dispatches on the file extension.
inline Image read_image(const std::string& path) {
  if (has_suffix(path, ".png")) return read_png(path);
  return read_pnm(path);
}

inline void write_image(const Image& img, const std::string& path) {
  if (has_suffix(path, ".png")) {
    write_png(img, path);
  } else {
    write_ppm(img, path);
  }
}

}  // namespace locattr
