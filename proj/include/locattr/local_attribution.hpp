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

// Local Attribution: gradients collected while exploring an axis-aligned box
// around the input with gradient-sign steps, toward and away from classes.
//
// Each exploration step moves a state x~ (itself within eps/2 of x) by eps/2
// along the gradient sign and credits every dimension with
// (x^ - x~)_i * dL/dx~_i. The next state restarts from x, one signed step of
// eps/2 away, which keeps every state inside the box.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "locattr/attribution.hpp"
#include "locattr/errors.hpp"
#include "locattr/model.hpp"
#include "locattr/tensor.hpp"

namespace locattr {

enum class SpaceMode { kLinear, kConstant };
enum class AttackType { kUntargeted, kTargeted, kBoth };
enum class StepKind { kUntargeted, kTargeted };
// Gradient that scores a targeted step's displacement. kTrueLabel uses the
// loss of the explained label at the same state, so every increment measures
// a change of one loss. kTargetLabel uses the target's own loss.
enum class TargetedCredit { kTrueLabel, kTargetLabel };

inline const char* to_string(SpaceMode m) {
  return m == SpaceMode::kLinear ? "linear" : "constant";
}
inline const char* to_string(AttackType a) {
  switch (a) {
    case AttackType::kUntargeted: return "untargeted";
    case AttackType::kTargeted: return "targeted";
    case AttackType::kBoth: return "both";
  }
  return "?";
}
inline const char* to_string(TargetedCredit c) {
  return c == TargetedCredit::kTrueLabel ? "true_label" : "target_label";
}
inline SpaceMode parse_space_mode(const std::string& s) {
  if (s == "linear") return SpaceMode::kLinear;
  if (s == "constant") return SpaceMode::kConstant;
  throw ArgumentError("unknown space mode '" + s + "'");
}
inline AttackType parse_attack_type(const std::string& s) {
  if (s == "untargeted") return AttackType::kUntargeted;
  if (s == "targeted") return AttackType::kTargeted;
  if (s == "both") return AttackType::kBoth;
  throw ArgumentError("unknown attack type '" + s + "'");
}
inline TargetedCredit parse_targeted_credit(const std::string& s) {
  if (s == "true_label") return TargetedCredit::kTrueLabel;
  if (s == "target_label") return TargetedCredit::kTargetLabel;
  throw ArgumentError("unknown targeted credit '" + s + "'");
}

// Per-dimension radius. Linear: eps_i = max(|x_i| / s, eps_min).
// Constant: eps_i = constant_radius.
inline Tensor epsilon_vector(const Tensor& x, double spatial_range, SpaceMode mode,
                             double epsilon_min, double constant_radius = 0.1) {
  if (!(spatial_range > 0.0)) throw ArgumentError("spatial range must be positive");
  if (!(epsilon_min >= 0.0)) throw ArgumentError("epsilon floor must be >= 0");
  Tensor eps(x.shape());
  if (mode == SpaceMode::kConstant) {
    if (!(constant_radius >= 0.0)) throw ArgumentError("constant radius must be >= 0");
    for (double& e : eps.data()) e = constant_radius;
    return eps;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    eps[i] = std::max(std::abs(x[i]) / spatial_range, epsilon_min);
  }
  return eps;
}

struct LocalSpace {
  Tensor center;
  Tensor radius;
  SpaceMode mode = SpaceMode::kLinear;
  double spatial_range = 20.0;
  double epsilon_min = 1e-3;
};

namespace detail {

inline Tensor signed_half_step(const Tensor& from, const Tensor& g, const Tensor& eps,
                               double direction) {
  require_same_shape(from, g, "gradient");
  require_same_shape(from, eps, "radius");
  Tensor out = from;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::clamp(from[i] + direction * (eps[i] / 2.0) * sign(g[i]), 0.0, 1.0);
  }
  return out;
}

}  // namespace detail

// x^ = clamp(x~ + eps/2 * sign(g), 0, 1): ascend the loss of the true class.
inline Tensor untargeted_step(const Tensor& state, const Tensor& grad, const Tensor& eps) {
  return detail::signed_half_step(state, grad, eps, +1.0);
}

// x^ = clamp(x~ - eps/2 * sign(g_t), 0, 1): descend the loss of a target class.
inline Tensor targeted_step(const Tensor& state, const Tensor& grad, const Tensor& eps) {
  return detail::signed_half_step(state, grad, eps, -1.0);
}

// The k most probable classes other than the top one, most probable first.
// Ties go to the lower index, both for the excluded top class and the order.
inline std::vector<std::size_t> select_targets(const Tensor& probs, std::size_t k) {
  if (probs.rank() != 1 || probs.size() < 2) {
    throw ArgumentError("probabilities must be a vector over >= 2 classes");
  }
  double total = 0.0;
  for (double p : probs.data()) {
    if (!std::isfinite(p) || p < 0.0) throw ArgumentError("invalid probability value");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ArgumentError("probabilities do not sum to 1");
  const std::size_t top = argmax(probs.data());
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i != top) rest.push_back(i);
  }
  std::stable_sort(rest.begin(), rest.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  rest.resize(std::min(k, rest.size()));
  return rest;
}

struct TraceStep {
  Tensor before;         // x~
  Tensor after;          // x^ = u(x~)
  Tensor gradient;       // dL(x~; credit_label)/dx~
  Tensor before_offset;  // signed offset that produced x~ from x, before clamping
  Tensor increment;      // (x^ - x~) * gradient, per dimension
  std::size_t label = 0;         // loss whose gradient sign moved the state
  std::size_t credit_label = 0;  // loss whose gradient scores the move
  StepKind kind = StepKind::kUntargeted;
};

struct ExplorationTrace {
  LocalSpace space;
  Objective::Kind objective = Objective::Kind::kCrossEntropy;
  std::vector<TraceStep> steps;
};

struct LaConfig {
  std::size_t iterations = 20;                 // N
  double spatial_range = 20.0;                 // s
  std::optional<std::size_t> k_targets;        // default min(c - 1, 20)
  SpaceMode mode = SpaceMode::kLinear;
  double epsilon_min = 1e-3;
  std::optional<double> constant_radius;       // default 1 / s
  AttackType attack = AttackType::kBoth;
  TargetedCredit credit = TargetedCredit::kTrueLabel;
  Objective::Kind objective = Objective::Kind::kCrossEntropy;
  std::uint64_t seed = 0;                      // recorded only; the method is deterministic
  bool record_trace = true;

  std::size_t resolved_targets(std::size_t num_classes) const {
    const std::size_t cap = num_classes - 1;
    return std::min(k_targets.value_or(std::min<std::size_t>(cap, 20)), cap);
  }
  double resolved_constant_radius() const {
    return constant_radius.value_or(1.0 / spatial_range);
  }
};

struct LaResult {
  AttributionMap map;
  ExplorationTrace trace;
  std::vector<std::size_t> targets;
  std::size_t gradient_evaluations = 0;  // explored states, one forward pass each
  std::size_t backward_passes = 0;       // two per targeted state under kTrueLabel
};

inline LocalSpace make_local_space(const Tensor& x, const LaConfig& cfg) {
  LocalSpace space;
  space.center = x;
  space.radius = epsilon_vector(x, cfg.spatial_range, cfg.mode, cfg.epsilon_min,
                                cfg.resolved_constant_radius());
  space.mode = cfg.mode;
  space.spatial_range = cfg.spatial_range;
  space.epsilon_min = cfg.epsilon_min;
  return space;
}

namespace detail {

// N one-step explorations driven by `objective`; each displacement is scored
// with the gradient of `credit`. Accumulates into `attribution` and `trace`.
inline void explore(Evaluator& ev, const LocalSpace& space, const Objective& objective,
                    const Objective& credit, StepKind kind, std::size_t iterations,
                    Tensor& attribution, ExplorationTrace* trace) {
  const Tensor& x = space.center;
  const Tensor& eps = space.radius;
  const double direction = kind == StepKind::kUntargeted ? 1.0 : -1.0;
  Tensor state = x;
  Tensor offset(x.shape(), 0.0);
  for (std::size_t k = 0; k < iterations; ++k) {
    ev.forward(state);
    const Tensor g = ev.input_gradient(objective).grad;
    Tensor scored = credit.label == objective.label ? g : ev.input_gradient(credit).grad;
    const Tensor after = kind == StepKind::kUntargeted ? untargeted_step(state, g, eps)
                                                       : targeted_step(state, g, eps);
    Tensor increment(x.shape());
    Tensor next_offset(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      increment[i] = (after[i] - state[i]) * scored[i];
      attribution[i] += increment[i];
      next_offset[i] = direction * (eps[i] / 2.0) * sign(g[i]);
    }
    Tensor next = kind == StepKind::kUntargeted ? untargeted_step(x, g, eps)
                                                : targeted_step(x, g, eps);
    if (trace) {
      trace->steps.push_back({std::move(state), after, std::move(scored), offset,
                              std::move(increment), objective.label, credit.label, kind});
    }
    state = std::move(next);
    offset = std::move(next_offset);
  }
}

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> config_echo(const LaConfig& cfg,
                                                                    std::size_t k) {
  char buf[64];
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("N", std::to_string(cfg.iterations));
  std::snprintf(buf, sizeof buf, "%.17g", cfg.spatial_range);
  out.emplace_back("s_range", buf);
  out.emplace_back("k_targets", std::to_string(k));
  out.emplace_back("mode", to_string(cfg.mode));
  std::snprintf(buf, sizeof buf, "%.17g", cfg.epsilon_min);
  out.emplace_back("eps_min", buf);
  out.emplace_back("attack", to_string(cfg.attack));
  out.emplace_back("credit", to_string(cfg.credit));
  out.emplace_back("seed", std::to_string(cfg.seed));
  return out;
}

// Untargeted phase against `label`, then one phase per target class chosen
// from the probabilities at x. Explores (k_targets + 1) * N states for
// AttackType::kBoth.
inline LaResult local_attribution(const ModelGraph& model, const Tensor& x, std::size_t label,
                                  const LaConfig& cfg) {
  if (cfg.iterations < 1) throw ArgumentError("local attribution needs N >= 1");
  if (label >= model.num_classes()) throw IndexError("label outside model classes");
  check_input(model, x);

  LaResult result;
  result.trace.space = make_local_space(x, cfg);
  result.trace.objective = cfg.objective;
  ExplorationTrace* trace = cfg.record_trace ? &result.trace : nullptr;
  const Objective base{cfg.objective, label};

  Evaluator ev(model);
  Tensor attribution(x.shape(), 0.0);

  if (cfg.attack != AttackType::kTargeted) {
    detail::explore(ev, result.trace.space, base, base, StepKind::kUntargeted, cfg.iterations,
                    attribution, trace);
    result.gradient_evaluations += cfg.iterations;
  }
  const std::size_t k = cfg.resolved_targets(model.num_classes());
  if (cfg.attack != AttackType::kUntargeted && k > 0) {
    result.targets = select_targets(softmax(forward_eval(model, x)), k);
    for (std::size_t target : result.targets) {
      const Objective step = base.with_label(target);
      detail::explore(ev, result.trace.space, step,
                      cfg.credit == TargetedCredit::kTrueLabel ? base : step,
                      StepKind::kTargeted, cfg.iterations, attribution, trace);
      result.gradient_evaluations += cfg.iterations;
    }
  }
  require_finite(attribution, "attribution");
  result.backward_passes = ev.gradient_evaluations();
  result.map.values = std::move(attribution);
  result.map.method = "la";
  result.map.config = config_echo(cfg, cfg.attack == AttackType::kUntargeted ? 0 : k);
  return result;
}

struct CompletenessTotals {
  double attr_total = 0.0;         // sum over dimensions of the accumulated map
  double first_order_total = 0.0;  // sum over steps of (x^ - x~) . g
  double loss_delta_total = 0.0;   // sum over steps of L(x^) - L(x~)

  double residual() const { return std::abs(first_order_total - loss_delta_total); }
};

inline CompletenessTotals completeness_residual(const ExplorationTrace& trace,
                                                const ModelGraph& model) {
  CompletenessTotals t;
  if (trace.steps.empty()) return t;
  Tensor accumulated(trace.space.center.shape(), 0.0);
  for (const TraceStep& s : trace.steps) {
    double dot = 0.0;
    for (std::size_t i = 0; i < s.gradient.size(); ++i) {
      accumulated[i] += s.increment[i];
      dot += (s.after[i] - s.before[i]) * s.gradient[i];
    }
    t.first_order_total += dot;
    const Objective obj{trace.objective, s.credit_label};
    t.loss_delta_total += objective_value(model, s.after, obj) -
                          objective_value(model, s.before, obj);
  }
  t.attr_total = accumulated.sum();
  return t;
}

// Fraction of explored states x^ that keep the model's decision at x.
inline double decision_preservation(const ExplorationTrace& trace, const ModelGraph& model) {
  if (trace.steps.empty()) throw ArgumentError("empty exploration trace");
  const std::size_t original = argmax(forward_eval(model, trace.space.center).data());
  std::size_t kept = 0;
  for (const TraceStep& s : trace.steps) {
    if (argmax(forward_eval(model, s.after).data()) == original) ++kept;
  }
  return static_cast<double>(kept) / static_cast<double>(trace.steps.size());
}

struct ContainmentReport {
  std::size_t checked = 0;
  std::size_t state_violations = 0;   // |x~ - x| > eps/2
  std::size_t explore_violations = 0; // |x^ - x| > eps
  std::size_t step_violations = 0;    // |x^ - x~| > eps/2
  std::size_t offset_violations = 0;  // pre-clamp offset not in {0, +-eps/2}

  std::size_t total() const {
    return state_violations + explore_violations + step_violations + offset_violations;
  }
};

// `slack` absorbs the one rounding of x + offset (use a few ulps of 1).
inline ContainmentReport check_containment(const ExplorationTrace& trace, double slack) {
  ContainmentReport r;
  const Tensor& x = trace.space.center;
  const Tensor& eps = trace.space.radius;
  for (const TraceStep& s : trace.steps) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      ++r.checked;
      const double half = eps[i] / 2.0;
      if (std::abs(s.before[i] - x[i]) > half + slack) ++r.state_violations;
      if (std::abs(s.after[i] - x[i]) > eps[i] + slack) ++r.explore_violations;
      if (std::abs(s.after[i] - s.before[i]) > half + slack) ++r.step_violations;
      const double o = s.before_offset[i];
      if (!(o == 0.0 || o == half || o == -half)) ++r.offset_violations;
    }
  }
  return r;
}

}  // namespace locattr
