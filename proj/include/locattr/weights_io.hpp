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

// LAW1 weight files. All integers little-endian.
//
//   "LAW1"                       4 bytes magic
//   version                      u32 (= 1)
//   input rank r, dims[r]        u32 each
//   layer count L                u32
//   L x { kind, in, out, kernel_h, kernel_w, padding }   u32 each
//   parameter count P            u64
//   P x f64                      per parametric layer: weight then bias,
//                                row-major, in layer order

#include <cstdint>
#include <string>
#include <vector>

#include "locattr/binary_io.hpp"
#include "locattr/model.hpp"

namespace locattr {

inline constexpr char kWeightMagic[] = "LAW1";
inline constexpr std::uint32_t kWeightVersion = 1;

inline std::vector<char> encode_weights(const ModelGraph& model) {
  binary::Writer w;
  w.bytes(std::string_view(kWeightMagic, 4));
  w.u32(kWeightVersion);
  w.u32(static_cast<std::uint32_t>(model.input_shape().size()));
  for (std::size_t d : model.input_shape()) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const LayerSpec& l : model.layers()) {
    w.u32(static_cast<std::uint32_t>(l.kind));
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u32(static_cast<std::uint32_t>(l.kernel_h));
    w.u32(static_cast<std::uint32_t>(l.kernel_w));
    w.u32(l.padding == Padding::kSame ? 1u : 0u);
  }
  w.u64(model.parameter_count());
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    for (double v : model.weight(i).data()) w.f64(v);
    for (double v : model.bias(i).data()) w.f64(v);
  }
  return w.buffer();
}

inline ModelGraph decode_weights(std::vector<char> bytes) {
  binary::Reader r(std::move(bytes));
  if (r.bytes(4) != std::string_view(kWeightMagic, 4)) {
    throw FormatError("not a LAW1 weight file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kWeightVersion) {
    throw FormatError("unsupported weight file version " + std::to_string(version));
  }
  const std::uint32_t rank = r.u32();
  if (rank == 0 || rank > 8) throw FormatError("implausible input rank");
  Shape input(rank);
  for (auto& d : input) d = r.u32();
  const std::uint32_t count = r.u32();
  if (count > 4096) throw FormatError("implausible layer count");
  std::vector<LayerSpec> layers(count);
  for (LayerSpec& l : layers) {
    const std::uint32_t kind = r.u32();
    if (kind < 1 || kind > 6) throw FormatError("unknown layer kind " + std::to_string(kind));
    l.kind = static_cast<LayerKind>(kind);
    l.in = r.u32();
    l.out = r.u32();
    l.kernel_h = r.u32();
    l.kernel_w = r.u32();
    const std::uint32_t pad = r.u32();
    if (pad > 1) throw FormatError("unknown padding code");
    l.padding = pad ? Padding::kSame : Padding::kValid;
  }
  const std::uint64_t declared = r.u64();

  std::vector<Tensor> weights(count), biases(count);
  std::uint64_t expected = 0;
  try {
    Shape shape = input;
    for (const LayerSpec& l : layers) {
      shape = infer_output_shape(l, shape);
      if (l.has_parameters()) expected += shape_size(l.weight_shape()) + l.out;
    }
  } catch (const SpecError& e) {
    throw FormatError(std::string("invalid layer table: ") + e.what());
  }
  if (declared != expected) throw FormatError("parameter count does not match layer table");
  if (r.remaining() != expected * 8) {
    throw FormatError(r.remaining() < expected * 8 ? "truncated parameter payload"
                                                   : "trailing bytes after parameters");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!layers[i].has_parameters()) continue;
    weights[i] = Tensor(layers[i].weight_shape());
    for (double& v : weights[i].data()) v = r.f64();
    biases[i] = Tensor(layers[i].bias_shape());
    for (double& v : biases[i].data()) v = r.f64();
  }
  try {
    return ModelGraph(input, std::move(layers), std::move(weights), std::move(biases));
  } catch (const SpecError& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
}

inline void save_weights(const ModelGraph& model, const std::string& path) {
  binary::Writer w;
  const auto bytes = encode_weights(model);
  w.bytes(std::string_view(bytes.data(), bytes.size()));
  w.save(path);
}

inline ModelGraph load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open weight file " + path);
  std::vector<char> data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return decode_weights(std::move(data));
}

}  // namespace locattr
