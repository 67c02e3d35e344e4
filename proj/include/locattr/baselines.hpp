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

#include <cmath>
#include <cstdint>
#include <random>

#include "locattr/attribution.hpp"
#include "locattr/errors.hpp"
#include "locattr/model.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

// Derives the seed of the k-th sub-stream from a master seed (SplitMix64).
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t k) {
  std::uint64_t z = master + (k + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Absolute input gradient; `signed_values` keeps the sign instead.
inline AttributionMap saliency(const ModelGraph& model, const Tensor& x,
                               const Objective& objective, bool signed_values = false) {
  AttributionMap map;
  map.values = grad_input(model, x, objective).grad;
  if (!signed_values) {
    for (double& v : map.values.data()) v = std::abs(v);
  }
  map.method = "sm";
  map.config = {{"signed", signed_values ? "1" : "0"}};
  return map;
}

// Midpoint Riemann sum of the path integral from `baseline` to x.
inline AttributionMap integrated_gradients(const ModelGraph& model, const Tensor& x,
                                           const Objective& objective,
                                           const Tensor& baseline, std::size_t steps) {
  if (steps < 1) throw ArgumentError("integrated gradients needs steps >= 1");
  require_same_shape(x, baseline, "integrated gradients baseline");
  Tensor total(x.shape(), 0.0);
  Tensor point(x.shape());
  Evaluator ev(model);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
    ev.forward(point);
    const Tensor g = ev.input_gradient(objective).grad;
    for (std::size_t i = 0; i < x.size(); ++i) total[i] += g[i];
  }
  AttributionMap map;
  map.values = Tensor(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    map.values[i] = (x[i] - baseline[i]) * (total[i] / static_cast<double>(steps));
  }
  map.method = "ig";
  map.config = {{"steps", std::to_string(steps)}};
  return map;
}

// Mean absolute gradient over `samples` Gaussian perturbations of x. Sample k
// draws its noise from the sub-stream split_seed(seed, k).
inline AttributionMap smoothgrad(const ModelGraph& model, const Tensor& x,
                                 const Objective& objective, double sigma,
                                 std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw ArgumentError("smoothgrad needs at least one sample");
  if (!(sigma >= 0.0)) throw ArgumentError("smoothgrad sigma must be >= 0");
  Tensor mean(x.shape(), 0.0);
  Tensor noisy(x.shape());
  Evaluator ev(model);
  for (std::size_t k = 0; k < samples; ++k) {
    std::mt19937_64 rng(split_seed(seed, k));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) noisy[i] = x[i] + sigma * noise(rng);
    ev.forward(noisy);
    const Tensor g = ev.input_gradient(objective).grad;
    // Running mean: identical samples reproduce the sample exactly.
    const double w = 1.0 / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < x.size(); ++i) mean[i] += (std::abs(g[i]) - mean[i]) * w;
  }
  AttributionMap map;
  map.values = std::move(mean);
  map.method = "sg";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", sigma);
  map.config = {{"sigma", buf}, {"n", std::to_string(samples)}, {"seed", std::to_string(seed)}};
  return map;
}

// Control ranking: i.i.d. uniform [0,1) scores.
inline AttributionMap random_attribution(const Shape& shape, std::uint64_t seed) {
  AttributionMap map;
  map.values = Tensor(shape);
  std::mt19937_64 rng(seed);
  for (double& v : map.values.data()) v = uniform01(rng);
  map.method = "random";
  map.config = {{"seed", std::to_string(seed)}};
  return map;
}

}  // namespace locattr
