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
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "locattr/binary_io.hpp"
#include "locattr/errors.hpp"
#include "locattr/image_io.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

struct Sample {
  Tensor input;
  std::size_t label = 0;
};

// Labelled inputs with every value in [0,1] and every label below the class
// count. Immutable once built.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<Sample> samples, std::size_t num_classes)
      : samples_(std::move(samples)), num_classes_(num_classes) {
    if (!samples_.empty()) input_shape_ = samples_.front().input.shape();
    for (const Sample& s : samples_) {
      if (s.input.shape() != input_shape_) {
        throw FormatError("dataset samples have differing shapes");
      }
      if (s.label >= num_classes_) {
        throw FormatError("label " + std::to_string(s.label) + " outside " +
                          std::to_string(num_classes_) + " classes");
      }
      for (double v : s.input.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError("dataset value outside [0,1]");
      }
    }
  }

  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Shape& input_shape() const { return input_shape_; }
  std::size_t num_classes() const { return num_classes_; }

  Dataset slice(std::size_t offset, std::size_t count) const {
    offset = std::min(offset, samples_.size());
    count = std::min(count, samples_.size() - offset);
    return Dataset(std::vector<Sample>(samples_.begin() + static_cast<std::ptrdiff_t>(offset),
                                       samples_.begin() + static_cast<std::ptrdiff_t>(offset + count)),
                   num_classes_);
  }

 private:
  std::vector<Sample> samples_;
  Shape input_shape_;
  std::size_t num_classes_ = 0;
};

enum class DatasetFormat { kIdx, kImageDir };

namespace detail {

struct IdxArray {
  Shape dims;
  std::vector<std::uint8_t> values;
};

inline IdxArray read_idx(const std::string& path) {
  binary::Reader r = binary::Reader::from_file(path);
  const std::uint32_t magic = r.u32_be();
  if ((magic >> 16) != 0) throw FormatError(path + ": bad IDX magic");
  const std::uint32_t type = (magic >> 8) & 0xFF;
  const std::uint32_t ndims = magic & 0xFF;
  if (type != 0x08) {
    throw FormatError(path + ": only unsigned-byte IDX data is supported");
  }
  if (ndims == 0) throw FormatError(path + ": IDX file without dimensions");
  IdxArray a;
  std::size_t total = 1;
  for (std::uint32_t i = 0; i < ndims; ++i) {
    const std::uint32_t d = r.u32_be();
    if (d == 0) throw FormatError(path + ": zero IDX dimension");
    a.dims.push_back(d);
    total *= d;
  }
  if (r.remaining() != total) throw FormatError(path + ": IDX payload size mismatch");
  a.values.resize(total);
  for (auto& v : a.values) v = r.u8();
  return a;
}

}  // namespace detail

// MNIST-style pair: images (magic 0x00000803 for N x H x W; any rank >= 2
// works, trailing dims become the sample shape) and labels (0x00000801).
// Bytes are scaled by 1/255.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::size_t num_classes = 0) {
  const detail::IdxArray images = detail::read_idx(images_path);
  const detail::IdxArray labels = detail::read_idx(labels_path);
  if (images.dims.size() < 2) throw FormatError(images_path + ": image IDX needs rank >= 2");
  if (labels.dims.size() != 1) throw FormatError(labels_path + ": label IDX must be rank 1");
  if (labels.dims[0] != images.dims[0]) {
    throw FormatError("IDX label count " + std::to_string(labels.dims[0]) +
                      " != image count " + std::to_string(images.dims[0]));
  }
  const Shape sample_shape(images.dims.begin() + 1, images.dims.end());
  const std::size_t per = shape_size(sample_shape);
  std::vector<Sample> samples(images.dims[0]);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<double> px(per);
    for (std::size_t j = 0; j < per; ++j) px[j] = images.values[i * per + j] / 255.0;
    samples[i].input = Tensor(sample_shape, std::move(px));
    samples[i].label = labels.values[i];
    max_label = std::max(max_label, samples[i].label);
  }
  if (num_classes == 0) num_classes = std::max<std::size_t>(2, max_label + 1);
  return Dataset(std::move(samples), num_classes);
}

// "train-images.idx3-ubyte" -> "train-labels.idx1-ubyte".
inline std::string idx_labels_path(const std::string& images_path) {
  std::string p = images_path;
  const auto at = p.rfind("images");
  if (at == std::string::npos) throw FormatError("cannot derive label path from " + p);
  p.replace(at, 6, "labels");
  const auto idx = p.rfind("idx");
  if (idx != std::string::npos && idx > at && idx + 3 < p.size() &&
      std::isdigit(static_cast<unsigned char>(p[idx + 3]))) {
    p[idx + 3] = '1';
  }
  return p;
}

inline Tensor image_to_tensor(const Image& img) {
  Shape shape = img.channels == 1 ? Shape{img.height, img.width}
                                  : Shape{img.channels, img.height, img.width};
  Tensor t(shape);
  for (std::size_t c = 0; c < img.channels; ++c) {
    for (std::size_t r = 0; r < img.height; ++r) {
      for (std::size_t col = 0; col < img.width; ++col) {
        t[(c * img.height + r) * img.width + col] = img.at(r, col, c) / 255.0;
      }
    }
  }
  return t;
}

// root/<class>/<image>: class folders sorted by name give labels 0, 1, ...;
// files within a class are taken in name order. PGM/PPM always, PNG when
// compiled in.
inline Dataset load_image_dir(const std::string& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw FormatError(root + " is not a directory");
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) throw FormatError(root + ": need at least two class folders");
  std::vector<Sample> samples;
  for (std::size_t label = 0; label < classes.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[label])) {
      const std::string name = e.path().string();
      if (!e.is_regular_file()) continue;
      if (has_suffix(name, ".ppm") || has_suffix(name, ".pgm") || has_suffix(name, ".png")) {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) samples.push_back({image_to_tensor(read_image(f.string())), label});
  }
  if (samples.empty()) throw FormatError(root + ": no images found");
  return Dataset(std::move(samples), classes.size());
}

inline DatasetFormat parse_dataset_format(const std::string& name) {
  if (name == "idx") return DatasetFormat::kIdx;
  if (name == "image-dir") return DatasetFormat::kImageDir;
  throw FormatError("unknown dataset format '" + name + "'");
}

inline Dataset load_dataset(const std::string& path, DatasetFormat format,
                            const std::string& labels_path = "") {
  if (format == DatasetFormat::kImageDir) return load_image_dir(path);
  return load_idx(path, labels_path.empty() ? idx_labels_path(path) : labels_path);
}

}  // namespace locattr
