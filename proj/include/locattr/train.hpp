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

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "locattr/dataset.hpp"
#include "locattr/errors.hpp"
#include "locattr/model.hpp"

namespace locattr {

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  // Stop after the first epoch whose training accuracy reaches this value;
  // values above 1 disable the check.
  double stop_at_accuracy = 2.0;
};

struct TrainResult {
  ModelGraph model;
  double train_accuracy = 0.0;
  std::size_t epochs_run = 0;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

inline double accuracy(const ModelGraph& model, const Dataset& data) {
  if (data.empty()) throw ArgumentError("accuracy of an empty dataset");
  std::size_t hits = 0;
  for (const Sample& s : data.samples()) {
    const Tensor z = forward_eval(model, s.input);
    if (argmax(z.data()) == s.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Mini-batch SGD on softmax cross-entropy, no momentum. Each epoch visits
// the samples in a fresh seeded permutation.
inline TrainResult train_sgd(const ModelGraph& initial, const Dataset& data,
                             const TrainConfig& cfg) {
  if (data.empty()) throw ArgumentError("cannot train on an empty dataset");
  if (!(cfg.learning_rate >= 0.0)) throw ArgumentError("learning rate must be >= 0");
  if (cfg.batch_size == 0) throw ArgumentError("batch size must be positive");
  if (data.input_shape() != initial.input_shape()) {
    throw DimensionError("dataset shape " + shape_string(data.input_shape()) +
                         " does not match model input " +
                         shape_string(initial.input_shape()));
  }
  for (const Sample& s : data.samples()) {
    if (s.label >= initial.num_classes()) throw IndexError("label beyond model classes");
  }

  std::vector<Tensor> weights = initial.weights();
  std::vector<Tensor> biases = initial.biases();
  const std::vector<LayerSpec>& layers = initial.layers();
  const std::size_t L = layers.size();

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{initial, 0.0, 0, {}};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const ModelGraph current(initial.input_shape(), layers, weights, biases);
      std::vector<Tensor> gw(L), gb(L);
      for (std::size_t i = 0; i < L; ++i) {
        if (!layers[i].has_parameters()) continue;
        gw[i] = Tensor(weights[i].shape(), 0.0);
        gb[i] = Tensor(biases[i].shape(), 0.0);
      }
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = data[order[k]];
        Recording rec = record_forward(current, s.input, /*parameter_grads=*/true);
        CrossEntropy ce = softmax_cross_entropy(rec.tape.value(rec.logits), s.label);
        loss_sum += ce.loss;
        rec.tape.backward(rec.logits, ce.grad_logits);
        for (std::size_t i = 0; i < L; ++i) {
          if (!layers[i].has_parameters()) continue;
          const Tensor w = rec.tape.grad(rec.parameters[i].first);
          const Tensor b = rec.tape.grad(rec.parameters[i].second);
          for (std::size_t j = 0; j < w.size(); ++j) gw[i][j] += w[j];
          for (std::size_t j = 0; j < b.size(); ++j) gb[i][j] += b[j];
        }
      }
      if (cfg.learning_rate == 0.0) continue;
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      for (std::size_t i = 0; i < L; ++i) {
        if (!layers[i].has_parameters()) continue;
        for (std::size_t j = 0; j < gw[i].size(); ++j) weights[i][j] -= step * gw[i][j];
        for (std::size_t j = 0; j < gb[i].size(); ++j) biases[i][j] -= step * gb[i][j];
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) throw DomainError("training diverged (non-finite loss)");
    result.epoch_loss.push_back(mean_loss);
    result.epochs_run = epoch + 1;
    if (cfg.stop_at_accuracy <= 1.0) {
      const ModelGraph current(initial.input_shape(), layers, weights, biases);
      if (accuracy(current, data) >= cfg.stop_at_accuracy) break;
    }
  }
  result.model = ModelGraph(initial.input_shape(), layers, std::move(weights), std::move(biases));
  result.train_accuracy = accuracy(result.model, data);
  return result;
}

}  // namespace locattr
