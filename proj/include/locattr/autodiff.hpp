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

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "locattr/errors.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

using NodeId = std::size_t;

enum class Padding { kValid, kSame };

enum class OpKind { kLeaf, kDense, kConv2d, kRelu, kSquare, kMaxPool2, kFlatten };

namespace ops {

// The forward kernels are free functions so that Tape::replay_matches() runs
// exactly the code that produced the recorded values.

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t out_channels, kernel_h, kernel_w;
  std::size_t out_h, out_w;
  std::size_t pad_top, pad_left;
};

inline ConvGeometry conv_geometry(const Shape& input, const Shape& kernel,
                                  Padding padding) {
  if (kernel.size() != 4) throw DimensionError("conv2d kernel must be rank 4");
  ConvGeometry g{};
  if (input.size() == 2) {
    g.channels = 1;
    g.height = input[0];
    g.width = input[1];
  } else if (input.size() == 3) {
    g.channels = input[0];
    g.height = input[1];
    g.width = input[2];
  } else {
    throw DimensionError("conv2d input must be [H,W] or [C,H,W], got " +
                         shape_string(input));
  }
  g.out_channels = kernel[0];
  g.kernel_h = kernel[2];
  g.kernel_w = kernel[3];
  if (kernel[1] != g.channels) {
    throw DimensionError("conv2d kernel expects " + std::to_string(kernel[1]) +
                         " channels, input has " + std::to_string(g.channels));
  }
  if (padding == Padding::kSame) {
    g.out_h = g.height;
    g.out_w = g.width;
    g.pad_top = (g.kernel_h - 1) / 2;
    g.pad_left = (g.kernel_w - 1) / 2;
  } else {
    if (g.kernel_h > g.height || g.kernel_w > g.width) {
      throw DimensionError("conv2d kernel larger than input");
    }
    g.out_h = g.height - g.kernel_h + 1;
    g.out_w = g.width - g.kernel_w + 1;
    g.pad_top = g.pad_left = 0;
  }
  return g;
}

inline Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.size() != weight.shape()[0]) {
    throw DimensionError("dense parameters must be W[out,in], b[out]");
  }
  const std::size_t out = weight.shape()[0];
  const std::size_t in = weight.shape()[1];
  if (x.rank() != 1 || x.size() != in) {
    throw DimensionError("dense expects input [" + std::to_string(in) +
                         "], got " + shape_string(x.shape()));
  }
  Tensor y({out});
  for (std::size_t o = 0; o < out; ++o) {
    double acc = bias[o];
    const double* row = weight.data().data() + o * in;
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
  return y;
}

inline Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                     Padding padding) {
  const ConvGeometry g = conv_geometry(x.shape(), kernel.shape(), padding);
  if (bias.rank() != 1 || bias.size() != g.out_channels) {
    throw DimensionError("conv2d bias must be [out_channels]");
  }
  Tensor y({g.out_channels, g.out_h, g.out_w});
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    for (std::size_t i = 0; i < g.out_h; ++i) {
      for (std::size_t j = 0; j < g.out_w; ++j) {
        double acc = bias[o];
        for (std::size_t c = 0; c < g.channels; ++c) {
          for (std::size_t u = 0; u < g.kernel_h; ++u) {
            const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) -
                                     static_cast<std::ptrdiff_t>(g.pad_top);
            if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.height)) continue;
            for (std::size_t v = 0; v < g.kernel_w; ++v) {
              const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(j + v) -
                                       static_cast<std::ptrdiff_t>(g.pad_left);
              if (s < 0 || s >= static_cast<std::ptrdiff_t>(g.width)) continue;
              acc += kernel[((o * g.channels + c) * g.kernel_h + u) * g.kernel_w + v] *
                     x[(c * g.height + static_cast<std::size_t>(r)) * g.width +
                       static_cast<std::size_t>(s)];
            }
          }
        }
        y[(o * g.out_h + i) * g.out_w + j] = acc;
      }
    }
  }
  return y;
}

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

inline Tensor square(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v * v;
  return y;
}

// 2x2 max-pool with stride 2 over [C,H,W]; odd trailing rows/columns are
// dropped. `winners` receives the flat input index chosen for each output.
inline Tensor max_pool2(const Tensor& x, std::vector<std::size_t>* winners) {
  if (x.rank() != 3 || x.shape()[1] < 2 || x.shape()[2] < 2) {
    throw DimensionError("max_pool2 expects [C,H,W] with H,W >= 2, got " +
                         shape_string(x.shape()));
  }
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor y({c, oh, ow});
  if (winners) winners->assign(y.size(), 0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (ch * h + 2 * i) * w + 2 * j;
        for (std::size_t u = 0; u < 2; ++u) {
          for (std::size_t v = 0; v < 2; ++v) {
            const std::size_t idx = (ch * h + 2 * i + u) * w + 2 * j + v;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t out = (ch * oh + i) * ow + j;
        y[out] = x[best];
        if (winners) (*winners)[out] = best;
      }
    }
  }
  return y;
}

inline Tensor flatten(const Tensor& x) { return x.reshaped({x.size()}); }

}  // namespace ops

// Records primitive operations in execution order and runs reverse-mode
// differentiation over them. Node ids are assigned in creation order, so the
// id order is a topological order and backward walks ids downwards.
//
// A Tape belongs to one thread; build a fresh one per forward pass.
class Tape {
 public:
  NodeId leaf(Tensor value, bool requires_grad = true) {
    Node n;
    n.op = OpKind::kLeaf;
    n.requires_grad = requires_grad;
    n.value = std::move(value);
    return push(std::move(n));
  }

  NodeId dense(NodeId x, NodeId weight, NodeId bias) {
    Node n = make(OpKind::kDense, {x, weight, bias}, 3);
    n.value = ops::dense(value(x), value(weight), value(bias));
    return push(std::move(n));
  }

  NodeId conv2d(NodeId x, NodeId kernel, NodeId bias, Padding padding) {
    Node n = make(OpKind::kConv2d, {x, kernel, bias}, 3);
    n.padding = padding;
    n.value = ops::conv2d(value(x), value(kernel), value(bias), padding);
    return push(std::move(n));
  }

  NodeId relu(NodeId x) {
    Node n = make(OpKind::kRelu, {x}, 1);
    n.value = ops::relu(value(x));
    return push(std::move(n));
  }

  NodeId square(NodeId x) {
    Node n = make(OpKind::kSquare, {x}, 1);
    n.value = ops::square(value(x));
    return push(std::move(n));
  }

  NodeId max_pool2(NodeId x) {
    Node n = make(OpKind::kMaxPool2, {x}, 1);
    n.value = ops::max_pool2(value(x), &n.winners);
    return push(std::move(n));
  }

  NodeId flatten(NodeId x) {
    Node n = make(OpKind::kFlatten, {x}, 1);
    n.value = ops::flatten(value(x));
    return push(std::move(n));
  }

  std::size_t size() const { return nodes_.size(); }
  OpKind op(NodeId id) const { return node(id).op; }
  std::vector<NodeId> inputs(NodeId id) const {
    const Node& n = node(id);
    return {n.inputs.begin(), n.inputs.begin() + n.num_inputs};
  }

  const Tensor& value(NodeId id) const { return node(id).value; }

  // Gradient accumulated by the last backward() call. Nodes that were not
  // reached (or do not require gradients) report zeros.
  Tensor grad(NodeId id) const {
    const Node& n = node(id);
    if (!has_backward_ || id >= grads_.size() || grads_[id].empty()) {
      return Tensor(n.value.shape(), 0.0);
    }
    return grads_[id];
  }

  bool has_gradients() const { return has_backward_; }

  // Seeds d(output) with `seed` and propagates to every node that requires a
  // gradient. Any previous gradients are discarded.
  void backward(NodeId output, const Tensor& seed) {
    require_same_shape(value(output), seed, "backward seed");
    grads_.assign(nodes_.size(), Tensor());
    backward_order_.clear();
    grads_[output] = seed;
    for (NodeId id = output + 1; id-- > 0;) {
      const Node& n = nodes_[id];
      if (grads_[id].empty() || !n.requires_grad) continue;
      backward_order_.push_back(id);
      propagate(id);
    }
    has_backward_ = true;
  }

  // Node ids in the order the last backward() visited them.
  const std::vector<NodeId>& backward_order() const { return backward_order_; }

  // Re-runs every recorded forward kernel from the recorded operand values and
  // reports whether all outputs reproduce bitwise.
  bool replay_matches() const {
    for (const Node& n : nodes_) {
      Tensor again;
      switch (n.op) {
        case OpKind::kLeaf:
          continue;
        case OpKind::kDense:
          again = ops::dense(in(n, 0), in(n, 1), in(n, 2));
          break;
        case OpKind::kConv2d:
          again = ops::conv2d(in(n, 0), in(n, 1), in(n, 2), n.padding);
          break;
        case OpKind::kRelu:
          again = ops::relu(in(n, 0));
          break;
        case OpKind::kSquare:
          again = ops::square(in(n, 0));
          break;
        case OpKind::kMaxPool2:
          again = ops::max_pool2(in(n, 0), nullptr);
          break;
        case OpKind::kFlatten:
          again = ops::flatten(in(n, 0));
          break;
      }
      if (!(again == n.value)) return false;
    }
    return true;
  }

 private:
  struct Node {
    OpKind op = OpKind::kLeaf;
    std::array<NodeId, 3> inputs{};
    std::size_t num_inputs = 0;
    bool requires_grad = false;
    Padding padding = Padding::kValid;
    Tensor value;
    std::vector<std::size_t> winners;
  };

  const Node& node(NodeId id) const {
    if (id >= nodes_.size()) throw IndexError("unknown tape node");
    return nodes_[id];
  }

  const Tensor& in(const Node& n, std::size_t k) const {
    return nodes_[n.inputs[k]].value;
  }

  Node make(OpKind op, std::array<NodeId, 3> inputs, std::size_t count) const {
    Node n;
    n.op = op;
    n.inputs = inputs;
    n.num_inputs = count;
    for (std::size_t k = 0; k < count; ++k) {
      n.requires_grad = n.requires_grad || node(inputs[k]).requires_grad;
    }
    return n;
  }

  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    has_backward_ = false;
    return nodes_.size() - 1;
  }

  Tensor& accum(NodeId id) {
    if (grads_[id].empty()) grads_[id] = Tensor(nodes_[id].value.shape(), 0.0);
    return grads_[id];
  }

  bool wants(NodeId id) const { return nodes_[id].requires_grad; }

  void propagate(NodeId id) {
    const Node& n = nodes_[id];
    const Tensor& gy = grads_[id];
    switch (n.op) {
      case OpKind::kLeaf:
        break;
      case OpKind::kDense: {
        const Tensor& x = in(n, 0);
        const Tensor& w = in(n, 1);
        const std::size_t out = w.shape()[0], nin = w.shape()[1];
        if (wants(n.inputs[0])) {
          Tensor& gx = accum(n.inputs[0]);
          for (std::size_t o = 0; o < out; ++o) {
            const double g = gy[o];
            const double* row = w.data().data() + o * nin;
            for (std::size_t i = 0; i < nin; ++i) gx[i] += row[i] * g;
          }
        }
        if (wants(n.inputs[1])) {
          Tensor& gw = accum(n.inputs[1]);
          for (std::size_t o = 0; o < out; ++o) {
            for (std::size_t i = 0; i < nin; ++i) gw[o * nin + i] += gy[o] * x[i];
          }
        }
        if (wants(n.inputs[2])) {
          Tensor& gb = accum(n.inputs[2]);
          for (std::size_t o = 0; o < out; ++o) gb[o] += gy[o];
        }
        break;
      }
      case OpKind::kConv2d:
        conv2d_backward(n, gy);
        break;
      case OpKind::kRelu: {
        if (!wants(n.inputs[0])) break;
        const Tensor& x = in(n, 0);
        Tensor& gx = accum(n.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x[i] > 0.0) gx[i] += gy[i];
        }
        break;
      }
      case OpKind::kSquare: {
        if (!wants(n.inputs[0])) break;
        const Tensor& x = in(n, 0);
        Tensor& gx = accum(n.inputs[0]);
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += 2.0 * x[i] * gy[i];
        break;
      }
      case OpKind::kMaxPool2: {
        if (!wants(n.inputs[0])) break;
        Tensor& gx = accum(n.inputs[0]);
        for (std::size_t o = 0; o < n.winners.size(); ++o) gx[n.winners[o]] += gy[o];
        break;
      }
      case OpKind::kFlatten: {
        if (!wants(n.inputs[0])) break;
        Tensor& gx = accum(n.inputs[0]);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
        break;
      }
    }
  }

  void conv2d_backward(const Node& n, const Tensor& gy) {
    const Tensor& x = in(n, 0);
    const Tensor& k = in(n, 1);
    const ops::ConvGeometry g = ops::conv_geometry(x.shape(), k.shape(), n.padding);
    const bool need_x = wants(n.inputs[0]);
    const bool need_k = wants(n.inputs[1]);
    Tensor* gx = need_x ? &accum(n.inputs[0]) : nullptr;
    Tensor* gk = need_k ? &accum(n.inputs[1]) : nullptr;
    if (wants(n.inputs[2])) {
      Tensor& gb = accum(n.inputs[2]);
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        for (std::size_t p = 0; p < g.out_h * g.out_w; ++p) {
          gb[o] += gy[o * g.out_h * g.out_w + p];
        }
      }
    }
    if (!need_x && !need_k) return;
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t i = 0; i < g.out_h; ++i) {
        for (std::size_t j = 0; j < g.out_w; ++j) {
          const double go = gy[(o * g.out_h + i) * g.out_w + j];
          if (go == 0.0) continue;
          for (std::size_t c = 0; c < g.channels; ++c) {
            for (std::size_t u = 0; u < g.kernel_h; ++u) {
              const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + u) -
                                       static_cast<std::ptrdiff_t>(g.pad_top);
              if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.height)) continue;
              for (std::size_t v = 0; v < g.kernel_w; ++v) {
                const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(j + v) -
                                         static_cast<std::ptrdiff_t>(g.pad_left);
                if (s < 0 || s >= static_cast<std::ptrdiff_t>(g.width)) continue;
                const std::size_t xi = (c * g.height + static_cast<std::size_t>(r)) *
                                            g.width +
                                        static_cast<std::size_t>(s);
                const std::size_t ki =
                    ((o * g.channels + c) * g.kernel_h + u) * g.kernel_w + v;
                if (gx) (*gx)[xi] += k[ki] * go;
                if (gk) (*gk)[ki] += x[xi] * go;
              }
            }
          }
        }
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<NodeId> backward_order_;
  bool has_backward_ = false;
};

}  // namespace locattr
