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

#include <cstdio>
#include <filesystem>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "locattr/dataset.hpp"
#include "locattr/image_io.hpp"
#include "locattr/train.hpp"
#include "locattr/weights_io.hpp"
#include "test_util.hpp"

namespace locattr {
namespace {

namespace fs = std::filesystem;
using ::locattr::testing::random_cnn;
using ::locattr::testing::scratch_dir;
using ::locattr::testing::write_idx;
using ::locattr::testing::random_input;

Dataset xor_dataset() {
  return Dataset({{Tensor::of({0, 0}), 0}, {Tensor::of({0, 1}), 1},
                  {Tensor::of({1, 0}), 1}, {Tensor::of({1, 1}), 0}},
                 2);
}

const std::vector<LayerSpec> kXorNet = {LayerSpec::dense(2, 8), LayerSpec::relu(),
                                        LayerSpec::dense(8, 2)};

TEST(BuildModel, ParameterCount) {
  const ModelGraph m = build_model({2}, {LayerSpec::dense(2, 3), LayerSpec::relu(),
                                         LayerSpec::dense(3, 2)},
                                   0);
  EXPECT_EQ(m.parameter_count(), 17u);
  EXPECT_EQ(m.num_classes(), 2u);
}

TEST(BuildModel, SeedDeterminism) {
  EXPECT_TRUE(build_model({2}, kXorNet, 42) == build_model({2}, kXorNet, 42));
  EXPECT_FALSE(build_model({2}, kXorNet, 42) == build_model({2}, kXorNet, 43));
}

TEST(BuildModel, InitialisationRange) {
  const ModelGraph m = build_model({16}, {LayerSpec::dense(16, 4)}, 3);
  for (double w : m.weight(0).data()) EXPECT_LE(std::abs(w), 0.25);
}

TEST(BuildModel, BrokenShapeChain) {
  EXPECT_THROW(build_model({2}, {LayerSpec::dense(2, 3), LayerSpec::dense(4, 2)}, 0), SpecError);
  EXPECT_THROW(build_model({2}, {LayerSpec::dense(2, 1)}, 0), SpecError);  // one class
  EXPECT_THROW(build_model({8, 8}, {LayerSpec::dense(64, 2)}, 0), SpecError);  // no flatten
}

TEST(Weights, RoundTripReproducesLogitsBitwise) {
  const fs::path dir = scratch_dir("roundtrip");
  const ModelGraph m = random_cnn(17, 3, 8, 5);
  save_weights(m, (dir / "m.law").string());
  const ModelGraph back = load_weights((dir / "m.law").string());
  EXPECT_TRUE(back == m);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Tensor x = random_input(m.input_shape(), s);
    EXPECT_TRUE(forward_eval(m, x) == forward_eval(back, x));
  }
}

TEST(Weights, HeaderLayout) {
  const auto bytes = encode_weights(build_model({2}, kXorNet, 1));
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(std::string(bytes.data(), 4), "LAW1");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[5], 0);
  // magic, version, rank, 1 dim, layer count, 3 x 6 u32, u64 count, 42 doubles
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 4 + 4 + 3 * 24 + 8 + 42 * 8);
}

TEST(Weights, BadMagicIsFormatError) {
  auto bytes = encode_weights(build_model({2}, kXorNet, 1));
  bytes[0] = 'X';
  EXPECT_THROW(decode_weights(bytes), FormatError);
}

TEST(Weights, TruncatedPayloadIsFormatError) {
  const fs::path dir = scratch_dir("truncated");
  auto bytes = encode_weights(build_model({2}, kXorNet, 1));
  bytes.resize(bytes.size() - 12);
  {
    std::ofstream out(dir / "t.law", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  EXPECT_THROW(load_weights((dir / "t.law").string()), FormatError);
  bytes.resize(30);  // inside the layer table
  EXPECT_THROW(decode_weights(bytes), FormatError);
}

TEST(Weights, WrongVersionIsFormatError) {
  auto bytes = encode_weights(build_model({2}, kXorNet, 1));
  bytes[4] = 9;
  EXPECT_THROW(decode_weights(bytes), FormatError);
}

TEST(TrainSgd, LearnsXor) {
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 5000;
  cfg.batch_size = 4;
  cfg.seed = 1;
  cfg.stop_at_accuracy = 1.0;
  const TrainResult r = train_sgd(build_model({2}, kXorNet, 1), xor_dataset(), cfg);
  EXPECT_EQ(r.train_accuracy, 1.0);
  EXPECT_LE(r.epochs_run, 5000u);
}

TEST(TrainSgd, ZeroLearningRateLeavesParametersUntouched) {
  const ModelGraph m = build_model({2}, kXorNet, 5);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  EXPECT_TRUE(train_sgd(m, xor_dataset(), cfg).model == m);
}

TEST(TrainSgd, SeededRunsAreBitwiseReproducible) {
  TrainConfig cfg;
  cfg.learning_rate = 0.3;
  cfg.epochs = 20;
  cfg.batch_size = 2;
  cfg.seed = 9;
  const ModelGraph m = build_model({2}, kXorNet, 2);
  EXPECT_TRUE(train_sgd(m, xor_dataset(), cfg).model == train_sgd(m, xor_dataset(), cfg).model);
}

TEST(TrainSgd, EmptyDatasetIsArgumentError) {
  EXPECT_THROW(train_sgd(build_model({2}, kXorNet, 1), Dataset({}, 2), TrainConfig{}),
               ArgumentError);
}

TEST(TrainSgd, DigitCnnReachesNinetyFivePercent) {
  const std::string dir = std::string(LOCATTR_DATA_DIR) + "/digits/";
  const Dataset train = load_idx(dir + "train-images.idx3-ubyte", dir + "train-labels.idx1-ubyte");
  const Dataset test = load_idx(dir + "test-images.idx3-ubyte", dir + "test-labels.idx1-ubyte");
  const ModelGraph m = build_model(
      train.input_shape(),
      {LayerSpec::conv2d(1, 8, 3, 3, Padding::kSame), LayerSpec::relu(), LayerSpec::max_pool2(),
       LayerSpec::flatten(), LayerSpec::dense(128, 32), LayerSpec::relu(),
       LayerSpec::dense(32, 10)},
      1);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 30;
  cfg.batch_size = 32;
  cfg.seed = 1;
  const TrainResult r = train_sgd(m, train, cfg);
  EXPECT_GE(accuracy(r.model, test), 0.95);
}

TEST(LoadDataset, IdxImagesAndLabels) {
  const fs::path dir = scratch_dir("idx");
  std::vector<std::uint8_t> pixels(10 * 28 * 28);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>(i % 256);
  write_idx(dir / "set-images.idx3-ubyte", 0x00000803, {10, 28, 28}, pixels);
  write_idx(dir / "set-labels.idx1-ubyte", 0x00000801, {10}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Dataset d = load_dataset((dir / "set-images.idx3-ubyte").string(), DatasetFormat::kIdx);
  ASSERT_EQ(d.size(), 10u);
  EXPECT_EQ(d.input_shape(), (Shape{28, 28}));
  EXPECT_EQ(d.num_classes(), 10u);
  EXPECT_EQ(d[3].label, 3u);
  EXPECT_DOUBLE_EQ(d[0].input[255], 1.0);
  for (const Sample& s : d.samples()) {
    for (double v : s.input.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(LoadDataset, IdxCountMismatchIsFormatError) {
  const fs::path dir = scratch_dir("idx_mismatch");
  write_idx(dir / "a-images.idx3-ubyte", 0x00000803, {3, 2, 2}, std::vector<std::uint8_t>(12));
  write_idx(dir / "a-labels.idx1-ubyte", 0x00000801, {2}, {0, 1});
  EXPECT_THROW(load_dataset((dir / "a-images.idx3-ubyte").string(), DatasetFormat::kIdx),
               FormatError);
}

TEST(LoadDataset, IdxBadMagicIsFormatError) {
  const fs::path dir = scratch_dir("idx_magic");
  write_idx(dir / "b-images.idx3-ubyte", 0x12340803, {1, 2, 2}, std::vector<std::uint8_t>(4));
  write_idx(dir / "b-labels.idx1-ubyte", 0x00000801, {1}, {0});
  EXPECT_THROW(load_dataset((dir / "b-images.idx3-ubyte").string(), DatasetFormat::kIdx),
               FormatError);
  EXPECT_THROW(parse_dataset_format("csv"), FormatError);
}

TEST(LoadDataset, ImageDirectoryWithClassFolders) {
  const fs::path dir = scratch_dir("imgdir");
  for (const char* cls : {"cat", "dog"}) {
    fs::create_directories(dir / cls);
    for (int i = 0; i < 3; ++i) {
      Image img{4, 3, 3, std::vector<std::uint8_t>(36, static_cast<std::uint8_t>(40 * i))};
      write_ppm(img, (dir / cls / ("img" + std::to_string(i) + ".ppm")).string());
    }
  }
  const Dataset d = load_dataset(dir.string(), DatasetFormat::kImageDir);
  ASSERT_EQ(d.size(), 6u);
  EXPECT_EQ(d.input_shape(), (Shape{3, 3, 4}));
  EXPECT_EQ(d.num_classes(), 2u);
  EXPECT_EQ(d[0].label, 0u);
  EXPECT_EQ(d[5].label, 1u);
  EXPECT_DOUBLE_EQ(d[1].input[0], 40.0 / 255.0);
}

TEST(LoadDataset, PngImagesWhenAvailable) {
  if (!png_supported()) GTEST_SKIP() << "built without libpng";
  const fs::path dir = scratch_dir("pngdir");
  for (const char* cls : {"a", "b"}) {
    fs::create_directories(dir / cls);
    Image img{5, 2, 1, std::vector<std::uint8_t>(10, 255)};
    write_png(img, (dir / cls / "x.png").string());
  }
  const Dataset d = load_dataset(dir.string(), DatasetFormat::kImageDir);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.input_shape(), (Shape{2, 5}));
  EXPECT_DOUBLE_EQ(d[1].input[9], 1.0);
}

TEST(Dataset, RejectsValuesOutsideUnitRange) {
  EXPECT_THROW(Dataset({{Tensor::of({1.5}), 0}}, 2), FormatError);
  EXPECT_THROW(Dataset({{Tensor::of({0.5}), 2}}, 2), FormatError);
}

}  // namespace
}  // namespace locattr
