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

// Attribution maps and their on-disk forms.
//
// Binary ("LAA1", little-endian):
//   "LAA1" | version u32 (= 1) | rank u32 | dims u32[rank] | f64[prod(dims)]
// CSV: header "index,value", one row per flat dimension, values printed with
// 17 significant digits so they parse back bitwise.

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "locattr/binary_io.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

struct AttributionMap {
  Tensor values;
  std::string method;
  std::string sample_id;
  // Key/value echo of the settings that produced the map.
  std::vector<std::pair<std::string, std::string>> config;
};

inline constexpr char kAttributionMagic[] = "LAA1";

inline void save_attribution_binary(const Tensor& values, const std::string& path) {
  binary::Writer w;
  w.bytes(std::string_view(kAttributionMagic, 4));
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(values.rank()));
  for (std::size_t d : values.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (double v : values.data()) w.f64(v);
  w.save(path);
}

inline Tensor load_attribution_binary(const std::string& path) {
  binary::Reader r = binary::Reader::from_file(path);
  if (r.bytes(4) != std::string_view(kAttributionMagic, 4)) {
    throw FormatError(path + ": not an attribution file (bad magic)");
  }
  if (r.u32() != 1) throw FormatError(path + ": unsupported attribution version");
  const std::uint32_t rank = r.u32();
  if (rank == 0 || rank > 8) throw FormatError(path + ": implausible rank");
  Shape shape(rank);
  for (auto& d : shape) {
    d = r.u32();
    if (d == 0) throw FormatError(path + ": zero dimension");
  }
  const std::size_t n = shape_size(shape);
  if (r.remaining() != n * 8) throw FormatError(path + ": payload size mismatch");
  std::vector<double> data(n);
  for (double& v : data) v = r.f64();
  return Tensor(std::move(shape), std::move(data));
}

inline void save_attribution_csv(const Tensor& values, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "index,value\n";
  char buf[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out << i << ',' << buf << '\n';
  }
  if (!out) throw Error("failed writing " + path);
}

}  // namespace locattr
