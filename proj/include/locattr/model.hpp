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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "locattr/autodiff.hpp"
#include "locattr/errors.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

// Numeric codes are part of the LAW1 weight file format.
enum class LayerKind : std::uint32_t {
  kDense = 1,
  kConv2d = 2,
  kRelu = 3,
  kMaxPool2 = 4,
  kFlatten = 5,
  kSquare = 6,
};

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  // Dense: in/out features. Conv2d: in/out channels.
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  Padding padding = Padding::kValid;

  static LayerSpec dense(std::size_t in, std::size_t out) {
    return {LayerKind::kDense, in, out, 0, 0, Padding::kValid};
  }
  static LayerSpec conv2d(std::size_t in_channels, std::size_t out_channels,
                          std::size_t kernel_h, std::size_t kernel_w,
                          Padding padding = Padding::kValid) {
    return {LayerKind::kConv2d, in_channels, out_channels, kernel_h, kernel_w, padding};
  }
  static LayerSpec relu() { return {LayerKind::kRelu}; }
  static LayerSpec max_pool2() { return {LayerKind::kMaxPool2}; }
  static LayerSpec flatten() { return {LayerKind::kFlatten}; }
  // Element-wise x^2. Gives smooth, exactly quadratic test models.
  static LayerSpec square() { return {LayerKind::kSquare}; }

  bool has_parameters() const {
    return kind == LayerKind::kDense || kind == LayerKind::kConv2d;
  }
  Shape weight_shape() const {
    if (kind == LayerKind::kDense) return {out, in};
    return {out, in, kernel_h, kernel_w};
  }
  Shape bias_shape() const { return {out}; }
  std::size_t fan_in() const {
    return kind == LayerKind::kDense ? in : in * kernel_h * kernel_w;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Output shape of `layer` applied to `input`; throws SpecError when they do
// not chain.
inline Shape infer_output_shape(const LayerSpec& layer, const Shape& input) {
  switch (layer.kind) {
    case LayerKind::kDense:
      if (layer.in == 0 || layer.out == 0) throw SpecError("dense with zero width");
      if (input.size() != 1 || input[0] != layer.in) {
        throw SpecError("dense(" + std::to_string(layer.in) + "->" +
                        std::to_string(layer.out) + ") cannot take input " +
                        shape_string(input));
      }
      return {layer.out};
    case LayerKind::kConv2d: {
      if (layer.in == 0 || layer.out == 0 || layer.kernel_h == 0 || layer.kernel_w == 0) {
        throw SpecError("conv2d with zero extent");
      }
      try {
        const auto g = ops::conv_geometry(input, layer.weight_shape(), layer.padding);
        return {g.out_channels, g.out_h, g.out_w};
      } catch (const DimensionError& e) {
        throw SpecError(std::string("conv2d: ") + e.what());
      }
    }
    case LayerKind::kMaxPool2:
      if (input.size() != 3 || input[1] < 2 || input[2] < 2) {
        throw SpecError("max_pool2 cannot take input " + shape_string(input));
      }
      return {input[0], input[1] / 2, input[2] / 2};
    case LayerKind::kFlatten:
      return {shape_size(input)};
    case LayerKind::kRelu:
    case LayerKind::kSquare:
      return input;
  }
  throw SpecError("unknown layer kind");
}

// A feed-forward classifier: a chain of layers ending in a logit vector.
// Parameters are fixed once constructed; share freely across threads.
class ModelGraph {
 public:
  // Validates the layer chain and parameter shapes.
  ModelGraph(Shape input_shape, std::vector<LayerSpec> layers,
             std::vector<Tensor> weights, std::vector<Tensor> biases)
      : input_shape_(std::move(input_shape)),
        layers_(std::move(layers)),
        weights_(std::move(weights)),
        biases_(std::move(biases)) {
    if (input_shape_.empty()) throw SpecError("model input shape is empty");
    for (std::size_t d : input_shape_) {
      if (d == 0) throw SpecError("model input dimensions must be positive");
    }
    if (weights_.size() != layers_.size() || biases_.size() != layers_.size()) {
      throw SpecError("one weight and bias slot required per layer");
    }
    Shape shape = input_shape_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      shape = infer_output_shape(layers_[i], shape);
      const LayerSpec& l = layers_[i];
      if (l.has_parameters()) {
        if (weights_[i].shape() != l.weight_shape() || biases_[i].shape() != l.bias_shape()) {
          throw SpecError("parameter shapes of layer " + std::to_string(i) +
                          " do not match its spec");
        }
      } else if (!weights_[i].empty() || !biases_[i].empty()) {
        throw SpecError("layer " + std::to_string(i) + " takes no parameters");
      }
    }
    if (shape.size() != 1) {
      throw SpecError("model must end in a logit vector, got " + shape_string(shape));
    }
    if (shape[0] < 2) throw SpecError("model needs at least two classes");
    num_classes_ = shape[0];
  }

  const Shape& input_shape() const { return input_shape_; }
  std::size_t input_size() const { return shape_size(input_shape_); }
  std::size_t num_classes() const { return num_classes_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Tensor& weight(std::size_t layer) const { return weights_.at(layer); }
  const Tensor& bias(std::size_t layer) const { return biases_.at(layer); }
  const std::vector<Tensor>& weights() const { return weights_; }
  const std::vector<Tensor>& biases() const { return biases_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      n += weights_[i].size() + biases_[i].size();
    }
    return n;
  }

  // Bitwise comparison of architecture and parameters.
  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;

 private:
  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
  std::size_t num_classes_ = 0;
};

// 53 random bits mapped to [0, 1). Spelled out instead of
// std::uniform_real_distribution so streams do not depend on the standard
// library implementation.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Parameters drawn uniformly from [-k, k] with k = 1/sqrt(fan_in), layer by
// layer, weights before biases.
inline ModelGraph build_model(const Shape& input_shape,
                              const std::vector<LayerSpec>& layers,
                              std::uint64_t seed) {
  Shape shape = input_shape;
  for (const LayerSpec& l : layers) shape = infer_output_shape(l, shape);

  std::mt19937_64 rng(seed);
  std::vector<Tensor> weights(layers.size()), biases(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (!l.has_parameters()) continue;
    const double k = 1.0 / std::sqrt(static_cast<double>(l.fan_in()));
    weights[i] = Tensor(l.weight_shape());
    for (double& w : weights[i].data()) w = (2.0 * uniform01(rng) - 1.0) * k;
    biases[i] = Tensor(l.bias_shape());
    for (double& b : biases[i].data()) b = (2.0 * uniform01(rng) - 1.0) * k;
  }
  return ModelGraph(input_shape, layers, std::move(weights), std::move(biases));
}

// Single dense layer: logits = W x + b with W of shape [classes, inputs].
inline ModelGraph linear_model(const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw SpecError("linear model weight must be rank 2");
  return ModelGraph({weight.shape()[1]},
                    {LayerSpec::dense(weight.shape()[1], weight.shape()[0])},
                    {weight}, {bias});
}

// ---------------------------------------------------------------------------
// Losses on the logit vector.

inline Tensor softmax(const Tensor& logits) {
  if (logits.rank() != 1) throw DimensionError("softmax expects a vector");
  require_finite(logits, "logits");
  double peak = -std::numeric_limits<double>::infinity();
  for (double z : logits.data()) peak = std::max(peak, z);
  Tensor p = logits;
  double total = 0.0;
  for (double& v : p.data()) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : p.data()) v /= total;
  return p;
}

struct CrossEntropy {
  double loss = 0.0;
  Tensor grad_logits;
};

// loss = -log softmax(z)[label]; d loss / d z = softmax(z) - onehot(label).
inline CrossEntropy softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1) throw DimensionError("cross entropy expects a vector");
  if (label >= logits.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  require_finite(logits, "logits");
  double peak = -std::numeric_limits<double>::infinity();
  for (double z : logits.data()) peak = std::max(peak, z);
  double total = 0.0;
  for (double z : logits.data()) total += std::exp(z - peak);
  const double log_norm = peak + std::log(total);
  CrossEntropy out;
  out.loss = log_norm - logits[label];
  out.grad_logits = logits;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad_logits[i] = std::exp(logits[i] - log_norm);
  }
  out.grad_logits[label] -= 1.0;
  return out;
}

// Scalar function of the logits whose input gradient is taken.
struct Objective {
  enum class Kind {
    kCrossEntropy,  // softmax cross-entropy against `label`
    kLogit,         // the raw logit z[label]
  };
  Kind kind = Kind::kCrossEntropy;
  std::size_t label = 0;

  static Objective cross_entropy(std::size_t label) { return {Kind::kCrossEntropy, label}; }
  static Objective logit(std::size_t label) { return {Kind::kLogit, label}; }
  Objective with_label(std::size_t other) const { return {kind, other}; }
};

struct ObjectiveValue {
  double value = 0.0;
  Tensor grad_logits;
};

inline ObjectiveValue evaluate_objective(const Tensor& logits, const Objective& objective) {
  if (objective.kind == Objective::Kind::kCrossEntropy) {
    CrossEntropy ce = softmax_cross_entropy(logits, objective.label);
    return {ce.loss, std::move(ce.grad_logits)};
  }
  if (objective.label >= logits.size()) throw IndexError("logit index out of range");
  Tensor seed(logits.shape(), 0.0);
  seed[objective.label] = 1.0;
  return {logits[objective.label], std::move(seed)};
}

// ---------------------------------------------------------------------------
// Forward recording and input gradients.

struct Recording {
  Tape tape;
  NodeId input = 0;
  NodeId logits = 0;
  // Per layer (weight, bias) node ids; only meaningful for parametric layers.
  std::vector<std::pair<NodeId, NodeId>> parameters;
};

inline void check_input(const ModelGraph& model, const Tensor& x) {
  if (x.shape() != model.input_shape()) {
    throw DimensionError("input shape " + shape_string(x.shape()) +
                         " does not match model input " +
                         shape_string(model.input_shape()));
  }
  require_finite(x, "input");
}

// Runs the model on `x` and records a fresh tape. With `parameter_grads` the
// parameters become differentiable leaves (training); otherwise only the
// input is.
inline Recording record_forward(const ModelGraph& model, const Tensor& x,
                                bool parameter_grads = false) {
  check_input(model, x);
  Recording rec;
  Tape& t = rec.tape;
  rec.input = t.leaf(x, !parameter_grads);
  rec.parameters.assign(model.layers().size(), {0, 0});
  NodeId h = rec.input;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const LayerSpec& l = model.layers()[i];
    switch (l.kind) {
      case LayerKind::kDense: {
        const NodeId w = t.leaf(model.weight(i), parameter_grads);
        const NodeId b = t.leaf(model.bias(i), parameter_grads);
        rec.parameters[i] = {w, b};
        h = t.dense(h, w, b);
        break;
      }
      case LayerKind::kConv2d: {
        const NodeId w = t.leaf(model.weight(i), parameter_grads);
        const NodeId b = t.leaf(model.bias(i), parameter_grads);
        rec.parameters[i] = {w, b};
        h = t.conv2d(h, w, b, l.padding);
        break;
      }
      case LayerKind::kRelu:
        h = t.relu(h);
        break;
      case LayerKind::kSquare:
        h = t.square(h);
        break;
      case LayerKind::kMaxPool2:
        h = t.max_pool2(h);
        break;
      case LayerKind::kFlatten:
        h = t.flatten(h);
        break;
    }
  }
  rec.logits = h;
  return rec;
}

inline Tensor forward_eval(const ModelGraph& model, const Tensor& x) {
  Recording rec = record_forward(model, x);
  return rec.tape.value(rec.logits);
}

inline Tensor predict_proba(const ModelGraph& model, const Tensor& x) {
  return softmax(forward_eval(model, x));
}

struct InputGradient {
  double value = 0.0;  // objective at the input
  Tensor logits;
  Tensor grad;         // d objective / d input, shaped like the input
};

// Holds the tape of the most recent forward pass so that several objectives
// can be differentiated against one recording. One instance per thread.
class Evaluator {
 public:
  explicit Evaluator(const ModelGraph& model) : model_(&model) {}

  const Tensor& forward(const Tensor& x) {
    recording_ = record_forward(*model_, x);
    return recording_->tape.value(recording_->logits);
  }

  bool has_recording() const { return recording_.has_value(); }

  const Tensor& logits() const {
    require_recording();
    return recording_->tape.value(recording_->logits);
  }

  InputGradient input_gradient(const Objective& objective) {
    require_recording();
    ObjectiveValue v = evaluate_objective(logits(), objective);
    InputGradient out;
    out.value = v.value;
    out.logits = logits();
    out.grad = backprop(v.grad_logits);
    return out;
  }

  // Gradient of <seed, logits> with respect to the input.
  Tensor input_gradient_from_seed(const Tensor& seed) {
    require_recording();
    return backprop(seed);
  }

  const Tape& tape() const {
    require_recording();
    return recording_->tape;
  }

  // Number of backward passes run so far.
  std::size_t gradient_evaluations() const { return gradient_evaluations_; }

 private:
  void require_recording() const {
    if (!recording_) throw StateError("no forward pass recorded");
  }

  Tensor backprop(const Tensor& seed) {
    recording_->tape.backward(recording_->logits, seed);
    ++gradient_evaluations_;
    Tensor g = recording_->tape.grad(recording_->input);
    if (!g.all_finite()) throw DomainError("non-finite input gradient");
    return g;
  }

  const ModelGraph* model_;
  std::optional<Recording> recording_;
  std::size_t gradient_evaluations_ = 0;
};

inline InputGradient grad_input(const ModelGraph& model, const Tensor& x,
                                const Objective& objective) {
  Evaluator ev(model);
  ev.forward(x);
  return ev.input_gradient(objective);
}

inline double objective_value(const ModelGraph& model, const Tensor& x,
                              const Objective& objective) {
  return evaluate_objective(forward_eval(model, x), objective).value;
}

// Central differences, one input dimension at a time.
inline Tensor finite_diff_gradient(const ModelGraph& model, const Tensor& x,
                                   const Objective& objective, double h) {
  if (!(h > 0.0)) throw ArgumentError("finite difference step must be positive");
  check_input(model, x);
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = objective_value(model, probe, objective);
    probe[i] = x[i] - h;
    const double down = objective_value(model, probe, objective);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace locattr
