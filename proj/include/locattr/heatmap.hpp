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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "locattr/errors.hpp"
#include "locattr/image_io.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

enum class Colormap { kGray, kDiverging };

inline Colormap parse_colormap(const std::string& s) {
  if (s == "gray" || s == "grey") return Colormap::kGray;
  if (s == "diverging") return Colormap::kDiverging;
  throw ArgumentError("unknown colormap '" + s + "'");
}

// Sums channels per pixel for [C,H,W]; [H,W] passes through.
inline Tensor pixel_attribution(const Tensor& values, const Shape& image_shape) {
  if (image_shape.size() != 2 && image_shape.size() != 3) {
    throw ArgumentError("image shape must be [H,W] or [C,H,W]");
  }
  if (values.size() != shape_size(image_shape)) {
    throw ArgumentError("attribution has " + std::to_string(values.size()) +
                        " values, image shape " + shape_string(image_shape) + " needs " +
                        std::to_string(shape_size(image_shape)));
  }
  const std::size_t c = image_shape.size() == 3 ? image_shape[0] : 1;
  const std::size_t h = image_shape[image_shape.size() - 2];
  const std::size_t w = image_shape[image_shape.size() - 1];
  Tensor out({h, w}, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < h * w; ++p) out[p] += values[ch * h * w + p];
  }
  return out;
}

// Gray: min-max normalized, hottest = 255. Diverging: blue (negative) to
// white (zero) to red (positive), scaled by the largest magnitude. A map with
// no spread renders uniform mid-gray either way.
inline Image render_heatmap(const Tensor& values, const Shape& image_shape,
                            Colormap colormap = Colormap::kGray) {
  const Tensor px = pixel_attribution(values, image_shape);
  require_finite(px, "attribution");
  Image img;
  img.height = px.shape()[0];
  img.width = px.shape()[1];
  img.channels = colormap == Colormap::kGray ? 1 : 3;
  img.pixels.assign(img.width * img.height * img.channels, 128);
  const auto [lo_it, hi_it] = std::minmax_element(px.data().begin(), px.data().end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return img;
  auto byte = [](double t) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0));
  };
  if (colormap == Colormap::kGray) {
    for (std::size_t p = 0; p < px.size(); ++p) img.pixels[p] = byte((px[p] - lo) / (hi - lo));
    return img;
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  for (std::size_t p = 0; p < px.size(); ++p) {
    const double t = px[p] / scale;  // [-1, 1]
    const std::uint8_t fade = byte(1.0 - std::abs(t));
    img.pixels[3 * p + 0] = t >= 0 ? 255 : fade;
    img.pixels[3 * p + 1] = fade;
    img.pixels[3 * p + 2] = t <= 0 ? 255 : fade;
  }
  return img;
}

}  // namespace locattr
