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

#include <algorithm>
#include <numeric>
#include <random>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "locattr/heatmap.hpp"
#include "locattr/metrics.hpp"
#include "test_util.hpp"

namespace locattr {
namespace {

using ::locattr::testing::affine_model;
using ::locattr::testing::random_input;
using ::testing::DoubleNear;
using ::testing::ElementsAre;

std::vector<double> probabilities(const MetricCurve& c) {
  std::vector<double> p;
  for (const CurvePoint& pt : c.points) p.push_back(pt.probability);
  return p;
}

// --- ranking ---------------------------------------------------------------

TEST(RankDimensions, DescendingByValue) {
  EXPECT_THAT(rank_dimensions(Tensor::of({0.1, 0.9, 0.5})), ElementsAre(1, 2, 0));
  EXPECT_THAT(rank_dimensions(Tensor::of({-1, 0, 1})), ElementsAre(2, 1, 0));
}

TEST(RankDimensions, TiesKeepIndexOrder) {
  EXPECT_THAT(rank_dimensions(Tensor::of({0.5, 0.5})), ElementsAre(0, 1));
  EXPECT_THAT(rank_dimensions(Tensor({4}, 0.0)), ElementsAre(0, 1, 2, 3));
}

TEST(RankDimensions, AlwaysAPermutation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor a = random_input({7, 3}, seed, -1, 1);
    EXPECT_TRUE(is_permutation_of(rank_dimensions(a), a.size()));
  }
  EXPECT_THROW(rank_dimensions(Tensor::of({0.0, std::nan("")})), ArgumentError);
}

TEST(IsPermutation, RejectsRepeatsAndGaps) {
  EXPECT_TRUE(is_permutation_of({2, 0, 1}, 3));
  EXPECT_FALSE(is_permutation_of({0, 0, 1}, 3));
  EXPECT_FALSE(is_permutation_of({0, 3, 1}, 3));
  EXPECT_FALSE(is_permutation_of({0, 1}, 3));
}

// --- AUC -------------------------------------------------------------------

TEST(Auc, Trapezoid) {
  EXPECT_DOUBLE_EQ(auc({{0, 0}, {1, 1}}), 0.5);
  EXPECT_DOUBLE_EQ(auc({{0, 0.3}, {0.5, 0.3}, {1, 0.3}}), 0.3);
  EXPECT_DOUBLE_EQ(auc({{0, 0}, {0.5, 1}, {1, 0}}), 0.5);
}

TEST(Auc, ErrorPaths) {
  EXPECT_THROW(auc({{0, 1}}), ArgumentError);
  EXPECT_THROW(auc({}), ArgumentError);
  EXPECT_THROW(auc({{0, 1}, {0, 1}}), ArgumentError);
}

// --- curves ----------------------------------------------------------------

// Logits z0 = x0 + 2 x1, z1 = 0.
ModelGraph worked_model() { return affine_model({{1, 2}, {0, 0}}, {0, 0}); }

TEST(InsertionCurve, WorkedExample) {
  const MetricCurve c =
      insertion_curve(worked_model(), Tensor::of({1, 1}), {1, 0}, Tensor({2}, 0.0), 3);
  EXPECT_THAT(probabilities(c),
              ElementsAre(DoubleNear(0.5, 1e-15), DoubleNear(0.8807970779778823, 1e-15),
                          DoubleNear(0.9525741268224334, 1e-15)));
  EXPECT_NEAR(c.auc, 0.8035420706945495, 1e-15);
  EXPECT_DOUBLE_EQ(c.points[1].fraction, 0.5);
}

TEST(DeletionCurve, WorkedExample) {
  const MetricCurve c =
      deletion_curve(worked_model(), Tensor::of({1, 1}), {1, 0}, Tensor({2}, 0.0), 3);
  EXPECT_THAT(probabilities(c),
              ElementsAre(DoubleNear(0.9525741268224334, 1e-15),
                          DoubleNear(0.7310585786300049, 1e-15), DoubleNear(0.5, 1e-15)));
  EXPECT_NEAR(c.auc, 0.7286728210206108, 1e-15);
}

TEST(Curves, FlatWhenInputIsTheBaseline) {
  const ModelGraph m = ::locattr::testing::random_cnn(2);
  const Tensor x = random_input(m.input_shape(), 3);
  const Ranking r = rank_dimensions(random_input(m.input_shape(), 4));
  const MetricCurve ins = insertion_curve(m, x, r, x, 11);
  const MetricCurve del = deletion_curve(m, x, r, x, 11);
  for (std::size_t j = 1; j < ins.points.size(); ++j) {
    EXPECT_EQ(ins.points[j].probability, ins.points[0].probability);
    EXPECT_EQ(del.points[j].probability, del.points[0].probability);
  }
  EXPECT_NEAR(ins.auc, ins.points[0].probability, 1e-15);
}

TEST(Curves, EndpointsAreInputAndBaseline) {
  const ModelGraph m = ::locattr::testing::random_cnn(5);
  const Tensor x = random_input(m.input_shape(), 6);
  const Tensor base = make_baseline(x, BaselineKind::kBlur);
  const Ranking r = rank_dimensions(random_input(m.input_shape(), 7));
  const std::size_t cls = argmax(forward_eval(m, x).data());
  const double px = predict_proba(m, x)[cls], pb = predict_proba(m, base)[cls];
  const MetricCurve ins = insertion_curve(m, x, r, base, 21);
  const MetricCurve del = deletion_curve(m, x, r, base, 21);
  EXPECT_EQ(ins.points.front().probability, pb);
  EXPECT_EQ(ins.points.back().probability, px);
  EXPECT_EQ(del.points.front().probability, px);
  EXPECT_EQ(del.points.back().probability, pb);
  EXPECT_EQ(ins.points.size(), 21u);
  EXPECT_DOUBLE_EQ(ins.points.back().fraction, 1.0);
}

TEST(Curves, CheckpointsNeverSkipOrRepeatPastTheEnd) {
  for (std::size_t n : {1u, 2u, 7u, 64u, 100u}) {
    for (std::size_t p : {2u, 3u, 11u, 101u}) {
      std::size_t prev = 0;
      for (std::size_t j = 0; j < p; ++j) {
        const std::size_t k = detail::processed_count(j, p, n);
        EXPECT_GE(k, prev);
        prev = k;
      }
      EXPECT_EQ(detail::processed_count(0, p, n), 0u);
      EXPECT_EQ(detail::processed_count(p - 1, p, n), n);
    }
  }
}

TEST(Curves, ErrorPaths) {
  const ModelGraph m = worked_model();
  const Tensor x = Tensor::of({1, 1});
  EXPECT_THROW(insertion_curve(m, x, {0, 0}, Tensor({2}), 3), ArgumentError);
  EXPECT_THROW(insertion_curve(m, x, {0, 1}, Tensor({2}), 1), ArgumentError);
  EXPECT_THROW(deletion_curve(m, x, {0, 1}, Tensor({3}), 3), DimensionError);
}

// --- closed-form oracle ----------------------------------------------------

TEST(LinearOracle, AgreesWithModelCurve) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 30, c = 2 + rng() % 5;
    std::vector<std::vector<double>> w(c, std::vector<double>(n));
    std::vector<double> b(c);
    std::uniform_real_distribution<double> u(-2, 2);
    for (auto& row : w) {
      for (double& v : row) v = u(rng);
    }
    for (double& v : b) v = u(rng);
    const Tensor x = random_input({n}, rng());
    const Ranking r = rank_dimensions(random_input({n}, rng()));
    const Tensor base = random_input({n}, rng());
    const std::size_t pts = 2 + rng() % 50;
    const MetricCurve got = insertion_curve(affine_model(w, b), x, r, base, pts);
    const MetricCurve want = linear_model_oracle(w, b, x, r, base, pts);
    ASSERT_EQ(got.points.size(), want.points.size());
    for (std::size_t j = 0; j < pts; ++j) {
      EXPECT_NEAR(got.points[j].probability, want.points[j].probability, 1e-9);
    }
    EXPECT_NEAR(got.auc, want.auc, 1e-9) << "trial " << trial;
    const MetricCurve got_del = deletion_curve(affine_model(w, b), x, r, base, pts);
    const MetricCurve want_del = linear_model_oracle(w, b, x, r, base, pts, CurveKind::kDeletion);
    EXPECT_NEAR(got_del.auc, want_del.auc, 1e-9) << "trial " << trial;
  }
}

TEST(LinearOracle, DeletionWorkedExample) {
  const MetricCurve c = linear_model_oracle({{1, 2}, {0, 0}}, {0, 0}, Tensor::of({1, 1}), {1, 0},
                                            Tensor({2}, 0.0), 3, CurveKind::kDeletion);
  EXPECT_NEAR(c.auc, 0.7286728210206108, 1e-15);
}

TEST(LinearOracle, ZeroWeightsGiveSoftmaxOfBias) {
  const std::vector<std::vector<double>> w(3, std::vector<double>(4, 0.0));
  const MetricCurve c =
      linear_model_oracle(w, {0, 0, 0}, random_input({4}, 1), {3, 2, 1, 0}, Tensor({4}), 5);
  for (const CurvePoint& p : c.points) EXPECT_DOUBLE_EQ(p.probability, 1.0 / 3.0);
  EXPECT_NEAR(c.auc, 1.0 / 3.0, 1e-15);
}

TEST(LinearOracle, SingleDimension) {
  const MetricCurve c = linear_model_oracle({{2}, {0}}, {0, 0}, Tensor::of({1}), {0},
                                            Tensor::of({0}), 2);
  EXPECT_THAT(probabilities(c),
              ElementsAre(DoubleNear(0.5, 1e-15), DoubleNear(0.8807970779778823, 1e-15)));
}

TEST(LinearOracle, GoodRankingBeatsReversedRanking) {
  // Only positive evidence for class 0; larger weights first inserts faster.
  const std::vector<std::vector<double>> w = {{4, 3, 2, 1, 0.5}, {0, 0, 0, 0, 0}};
  const Tensor x = Tensor({5}, 1.0);
  const double good = linear_model_oracle(w, {0, 0}, x, {0, 1, 2, 3, 4}, Tensor({5}), 6).auc;
  const double bad = linear_model_oracle(w, {0, 0}, x, {4, 3, 2, 1, 0}, Tensor({5}), 6).auc;
  EXPECT_GT(good, bad);
}

TEST(LinearOracle, ErrorPaths) {
  EXPECT_THROW(linear_model_oracle({{1, 1}, {0, 0}}, {0, 0}, Tensor::of({1, 1}), {1, 1},
                                   Tensor({2}), 3),
               ArgumentError);
  EXPECT_THROW(linear_model_oracle({{1, 1}}, {0}, Tensor::of({1, 1}), {0, 1}, Tensor({2}), 3),
               ArgumentError);
}

// --- reference states ------------------------------------------------------

TEST(MakeBaseline, Kinds) {
  const Tensor x = Tensor({3, 3}, {0, 0, 0, 0, 0.9, 0, 0, 0, 0});
  EXPECT_TRUE(make_baseline(x, BaselineKind::kZeros) == Tensor({3, 3}, 0.0));
  EXPECT_TRUE(make_baseline(x, BaselineKind::kOnes) == Tensor({3, 3}, 1.0));
  const Tensor blur = make_baseline(x, BaselineKind::kBlur);
  EXPECT_NEAR(blur[4], 0.1, 1e-15);
  EXPECT_NEAR(blur[0], 0.9 / 4, 1e-15);
  EXPECT_NEAR(blur[1], 0.9 / 6, 1e-15);
  EXPECT_EQ(parse_baseline_kind("black"), BaselineKind::kZeros);
  EXPECT_THROW(parse_baseline_kind("grey"), ArgumentError);
}

// --- heatmaps --------------------------------------------------------------

TEST(Heatmap, UniformMapIsMidGray) {
  const Image img = render_heatmap(Tensor({4, 4}, 0.0), {4, 4});
  EXPECT_EQ(img.width, 4u);
  EXPECT_EQ(img.channels, 1u);
  for (std::uint8_t p : img.pixels) EXPECT_EQ(p, 128);
}

TEST(Heatmap, HottestPixelIsWhite) {
  Tensor a({3, 3}, 0.1);
  a[0] = 5.0;
  a[8] = -1.0;
  const Image img = render_heatmap(a, {3, 3});
  EXPECT_EQ(img.pixels[0], 255);
  EXPECT_EQ(img.pixels[8], 0);
  EXPECT_EQ(*std::max_element(img.pixels.begin() + 1, img.pixels.end()), img.pixels[1]);
}

TEST(Heatmap, ChannelsAreSummed) {
  const Tensor a({2, 1, 2}, {1, -1, 2, 3});
  EXPECT_THAT(pixel_attribution(a, {2, 1, 2}).values(), ElementsAre(3, 2));
}

TEST(Heatmap, DivergingSignColors) {
  const Image img = render_heatmap(Tensor({1, 3}, {-2, 0, 2}), {1, 3}, Colormap::kDiverging);
  EXPECT_THAT(img.pixels, ElementsAre(0, 0, 255, 255, 255, 255, 255, 0, 0));
}

TEST(Heatmap, LengthMismatchIsArgumentError) {
  EXPECT_THROW(render_heatmap(Tensor({5}, 0.0), {2, 2}), ArgumentError);
  EXPECT_THROW(parse_colormap("jet"), ArgumentError);
}

}  // namespace
}  // namespace locattr
