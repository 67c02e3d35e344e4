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

// Insertion / deletion curves over individual input dimensions. Every scalar
// dimension (each channel of each pixel) is ranked and flipped on its own.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "locattr/errors.hpp"
#include "locattr/model.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

// Dimension indices, most important first.
using Ranking = std::vector<std::size_t>;

struct CurvePoint {
  double fraction = 0.0;     // share of dimensions processed
  double probability = 0.0;  // softmax probability of the originally predicted class
};

struct MetricCurve {
  std::vector<CurvePoint> points;
  double auc = 0.0;
};

// Descending by value; equal values keep ascending index order.
inline Ranking rank_dimensions(const Tensor& attribution) {
  for (double v : attribution.data()) {
    if (std::isnan(v)) throw ArgumentError("attribution contains NaN");
  }
  Ranking r(attribution.size());
  std::iota(r.begin(), r.end(), std::size_t{0});
  std::stable_sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) {
    return attribution[a] > attribution[b];
  });
  return r;
}

inline bool is_permutation_of(const Ranking& ranking, std::size_t n) {
  if (ranking.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t i : ranking) {
    if (i >= n || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

// Trapezoidal rule over (fraction, probability).
inline double auc(const std::vector<CurvePoint>& points) {
  if (points.size() < 2) throw ArgumentError("AUC needs at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].fraction - points[i - 1].fraction;
    if (!(dx > 0.0)) throw ArgumentError("curve fractions must be strictly increasing");
    area += dx * (points[i].probability + points[i - 1].probability) / 2.0;
  }
  return area;
}

namespace detail {

// Number of ranked dimensions processed at point j of `n_points`.
inline std::size_t processed_count(std::size_t j, std::size_t n_points, std::size_t n) {
  return j * n / (n_points - 1);
}

inline void check_curve_args(const Tensor& x, const Ranking& ranking, const Tensor& baseline,
                             std::size_t n_points) {
  if (n_points < 2) throw ArgumentError("a curve needs n_points >= 2");
  require_same_shape(x, baseline, "curve baseline");
  if (!is_permutation_of(ranking, x.size())) {
    throw ArgumentError("ranking is not a permutation of the input dimensions");
  }
}

// Walks from `start` to `finish`, copying `finish` values in ranking order,
// and scores every checkpoint with `prob`.
template <typename ProbabilityFn>
MetricCurve sweep(const Tensor& start, const Tensor& finish, const Ranking& ranking,
                  std::size_t n_points, ProbabilityFn&& prob) {
  MetricCurve curve;
  Tensor state = start;
  std::size_t done = 0;
  for (std::size_t j = 0; j < n_points; ++j) {
    const std::size_t target = processed_count(j, n_points, ranking.size());
    for (; done < target; ++done) state[ranking[done]] = finish[ranking[done]];
    curve.points.push_back({static_cast<double>(j) / static_cast<double>(n_points - 1),
                            prob(state)});
  }
  curve.auc = auc(curve.points);
  return curve;
}

}  // namespace detail

// Starts from the baseline and restores x dimension by dimension, most
// important first. Tracks the class the model predicts at x.
inline MetricCurve insertion_curve(const ModelGraph& model, const Tensor& x,
                                   const Ranking& ranking, const Tensor& baseline,
                                   std::size_t n_points) {
  detail::check_curve_args(x, ranking, baseline, n_points);
  const std::size_t cls = argmax(forward_eval(model, x).data());
  return detail::sweep(baseline, x, ranking, n_points,
                       [&](const Tensor& s) { return predict_proba(model, s)[cls]; });
}

// Starts from x and overwrites dimensions with the baseline, most important
// first.
inline MetricCurve deletion_curve(const ModelGraph& model, const Tensor& x,
                                  const Ranking& ranking, const Tensor& baseline,
                                  std::size_t n_points) {
  detail::check_curve_args(x, ranking, baseline, n_points);
  const std::size_t cls = argmax(forward_eval(model, x).data());
  return detail::sweep(x, baseline, ranking, n_points,
                       [&](const Tensor& s) { return predict_proba(model, s)[cls]; });
}

enum class CurveKind { kInsertion, kDeletion };

// Insertion or deletion curve of the affine classifier logits = W x + b (W is
// [classes, n]) computed in closed form, without the model/tape machinery.
inline MetricCurve linear_model_oracle(const std::vector<std::vector<double>>& weight,
                                       const std::vector<double>& bias, const Tensor& x,
                                       const Ranking& ranking, const Tensor& baseline,
                                       std::size_t n_points,
                                       CurveKind kind = CurveKind::kInsertion) {
  detail::check_curve_args(x, ranking, baseline, n_points);
  if (weight.size() != bias.size() || weight.size() < 2) {
    throw ArgumentError("oracle needs one weight row and bias per class (>= 2)");
  }
  for (const auto& row : weight) {
    if (row.size() != x.size()) throw DimensionError("oracle weight row length mismatch");
  }
  auto logits = [&](const Tensor& s) {
    std::vector<double> z(bias);
    for (std::size_t c = 0; c < z.size(); ++c) {
      for (std::size_t i = 0; i < s.size(); ++i) z[c] += weight[c][i] * s[i];
    }
    return z;
  };
  auto probability = [](const std::vector<double>& z, std::size_t cls) {
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - peak);
    return std::exp(z[cls] - peak) / total;
  };
  const std::vector<double> z0 = logits(x);
  const std::size_t cls =
      static_cast<std::size_t>(std::max_element(z0.begin(), z0.end()) - z0.begin());
  const bool insertion = kind == CurveKind::kInsertion;
  return detail::sweep(insertion ? baseline : x, insertion ? x : baseline, ranking, n_points,
                       [&](const Tensor& s) { return probability(logits(s), cls); });
}

enum class BaselineKind { kZeros, kOnes, kBlur };

inline BaselineKind parse_baseline_kind(const std::string& s) {
  if (s == "zeros" || s == "black") return BaselineKind::kZeros;
  if (s == "ones" || s == "white") return BaselineKind::kOnes;
  if (s == "blur") return BaselineKind::kBlur;
  throw ArgumentError("unknown baseline '" + s + "'");
}

// Reference state for insertion/deletion. Blur is a 3x3 box mean per channel
// for [H,W] / [C,H,W] inputs and the global mean otherwise.
inline Tensor make_baseline(const Tensor& x, BaselineKind kind) {
  if (kind == BaselineKind::kZeros) return Tensor(x.shape(), 0.0);
  if (kind == BaselineKind::kOnes) return Tensor(x.shape(), 1.0);
  if (x.rank() != 2 && x.rank() != 3) return Tensor(x.shape(), x.sum() / static_cast<double>(x.size()));
  const std::size_t c = x.rank() == 3 ? x.shape()[0] : 1;
  const std::size_t h = x.shape()[x.rank() - 2];
  const std::size_t w = x.shape()[x.rank() - 1];
  Tensor out(x.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t col = 0; col < w; ++col) {
        double acc = 0.0;
        int count = 0;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(col) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w)) continue;
            acc += x[(ch * h + static_cast<std::size_t>(rr)) * w + static_cast<std::size_t>(cc)];
            ++count;
          }
        }
        out[(ch * h + r) * w + col] = acc / count;
      }
    }
  }
  return out;
}

}  // namespace locattr
