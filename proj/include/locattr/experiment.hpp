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

// Experiment driver behind the `locattr` command line: configuration,
// train / attribute / evaluate / ablate / render, and the run report.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "locattr/attribution.hpp"
#include "locattr/baselines.hpp"
#include "locattr/dataset.hpp"
#include "locattr/errors.hpp"
#include "locattr/heatmap.hpp"
#include "locattr/local_attribution.hpp"
#include "locattr/metrics.hpp"
#include "locattr/model.hpp"
#include "locattr/train.hpp"
#include "locattr/weights_io.hpp"

namespace locattr {

// Bad command line or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// 0 success, 1 usage/config, 2 data/format, 3 numeric failure.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DomainError*>(&e)) return 3;
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
      dynamic_cast<const SpecError*>(&e)) {
    return 1;
  }
  return 2;
}

// ---------------------------------------------------------------------------
// Configuration: flat "section.key=value" pairs.

inline const std::vector<std::pair<std::string, std::string>>& config_defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"model.path", ""},
      {"model.arch", "conv:8:3:same,relu,pool,flatten,dense:32,relu,dense:10"},
      {"model.seed", "1"},
      {"data.path", ""},
      {"data.labels", ""},
      {"data.format", "idx"},
      {"data.test_path", ""},
      {"data.test_labels", ""},
      {"train.lr", "0.1"},
      {"train.epochs", "30"},
      {"train.batch", "32"},
      {"train.seed", "1"},
      {"train.stop_at", "2"},
      {"method.name", "la"},
      {"method.label", "predicted"},
      {"method.N", "20"},
      {"method.s_range", "20"},
      {"method.k_targets", "auto"},
      {"method.mode", "linear"},
      {"method.eps_min", "0.001"},
      {"method.eps_const", "auto"},
      {"method.attack", "both"},
      {"method.credit", "true_label"},
      {"method.ig_steps", "50"},
      {"method.sg_sigma", "0.15"},
      {"method.sg_n", "50"},
      {"method.signed", "0"},
      {"metric.baseline", "zeros"},
      {"metric.n_points", "101"},
      {"run.samples", "10"},
      {"run.offset", "0"},
      {"run.seed", "0"},
      {"run.out", "locattr_out"},
      {"run.threads", "1"},
      {"run.heatmaps", "0"},
      {"run.curves", "1"},
      {"run.colormap", "gray"},
      {"ablate.param", ""},
      {"ablate.values", ""},
      {"render.input", ""},
      {"render.shape", ""},
      {"render.out", ""},
  };
  return defaults;
}

class ExperimentConfig {
 public:
  ExperimentConfig() {
    for (const auto& [k, v] : config_defaults()) values_[k] = v;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (!has(key)) throw UsageError("unknown configuration key '" + key + "'");
    values_[key] = value;
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown configuration key '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    const std::string& s = str(key);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError(key + ": expected a number, got '" + s + "'");
    }
  }

  std::size_t count(const std::string& key) const {
    const std::string& s = str(key);
    try {
      std::size_t used = 0;
      if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
      const unsigned long long v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError(key + ": expected a non-negative integer, got '" + s + "'");
    }
  }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no" || s.empty()) return false;
    throw UsageError(key + ": expected a boolean, got '" + s + "'");
  }

  // Lines "key = value"; '#' starts a comment. "[section]" headers prefix
  // the following keys with "section.".
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
      }
      std::string key = trim(t.substr(0, eq));
      if (!section.empty()) key = section + "." + key;
      set(key, trim(t.substr(eq + 1)));
    }
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

// "conv:8:3:same,relu,pool,flatten,dense:10": conv:<out>:<kernel>[:same|valid],
// dense:<out>, relu, square, pool, flatten. Input widths are inferred.
inline std::vector<LayerSpec> parse_architecture(const std::string& arch, const Shape& input) {
  std::vector<LayerSpec> layers;
  Shape shape = input;
  auto number = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoul(s, &used);
      if (used != s.size() || v == 0) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw SpecError("bad number '" + s + "' in architecture");
    }
  };
  for (const std::string& item : split(arch, ',')) {
    const auto f = split(item, ':');
    LayerSpec l;
    if (f.empty()) continue;
    if (f[0] == "dense" && f.size() == 2) {
      if (shape.size() != 1) throw SpecError("dense needs a flat input; add 'flatten'");
      l = LayerSpec::dense(shape[0], number(f[1]));
    } else if (f[0] == "conv" && (f.size() == 3 || f.size() == 4)) {
      const std::size_t in_ch = shape.size() == 3 ? shape[0] : 1;
      Padding pad = Padding::kValid;
      if (f.size() == 4) {
        if (f[3] == "same") pad = Padding::kSame;
        else if (f[3] != "valid") throw SpecError("unknown padding '" + f[3] + "'");
      }
      const std::size_t k = number(f[2]);
      l = LayerSpec::conv2d(in_ch, number(f[1]), k, k, pad);
    } else if (f[0] == "relu" && f.size() == 1) {
      l = LayerSpec::relu();
    } else if (f[0] == "square" && f.size() == 1) {
      l = LayerSpec::square();
    } else if (f[0] == "pool" && f.size() == 1) {
      l = LayerSpec::max_pool2();
    } else if (f[0] == "flatten" && f.size() == 1) {
      l = LayerSpec::flatten();
    } else {
      throw SpecError("unknown layer '" + item + "'");
    }
    shape = infer_output_shape(l, shape);
    layers.push_back(l);
  }
  if (layers.empty()) throw SpecError("empty architecture");
  return layers;
}

inline Shape parse_shape(const std::string& s) {
  Shape shape;
  for (const std::string& part : split(s, ',')) {
    try {
      shape.push_back(std::stoul(part));
    } catch (const std::exception&) {
      throw UsageError("bad shape '" + s + "'");
    }
  }
  if (shape.empty()) throw UsageError("empty shape");
  return shape;
}

inline Dataset load_config_dataset(const ExperimentConfig& cfg, const std::string& path_key,
                                   const std::string& labels_key) {
  const std::string& path = cfg.str(path_key);
  if (path.empty()) throw UsageError(path_key + " is required");
  if (!std::filesystem::exists(path)) throw FormatError("dataset not found: " + path);
  return load_dataset(path, parse_dataset_format(cfg.str("data.format")), cfg.str(labels_key));
}

inline ModelGraph load_config_model(const ExperimentConfig& cfg) {
  const std::string& path = cfg.str("model.path");
  if (path.empty()) throw UsageError("model.path is required");
  return load_weights(path);
}

// ---------------------------------------------------------------------------
// train

struct TrainReport {
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  std::size_t parameter_count = 0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"train_accuracy", train_accuracy},
                     {"epochs_run", epochs_run},
                     {"final_loss", final_loss},
                     {"parameter_count", parameter_count}};
    if (test_accuracy) j["test_accuracy"] = *test_accuracy;
    return j;
  }
};

inline TrainReport cmd_train(const ExperimentConfig& cfg) {
  const Dataset train = load_config_dataset(cfg, "data.path", "data.labels");
  if (train.empty()) throw FormatError("training set is empty");
  if (cfg.str("model.path").empty()) throw UsageError("model.path is required");
  const auto layers = parse_architecture(cfg.str("model.arch"), train.input_shape());
  const ModelGraph initial = build_model(train.input_shape(), layers, cfg.count("model.seed"));
  if (initial.num_classes() < train.num_classes()) {
    throw SpecError("model has fewer outputs than the dataset has classes");
  }
  TrainConfig tc;
  tc.learning_rate = cfg.real("train.lr");
  tc.epochs = cfg.count("train.epochs");
  tc.batch_size = cfg.count("train.batch");
  tc.seed = cfg.count("train.seed");
  tc.stop_at_accuracy = cfg.real("train.stop_at");
  TrainResult r = train_sgd(initial, train, tc);
  save_weights(r.model, cfg.str("model.path"));

  TrainReport report;
  report.train_accuracy = r.train_accuracy;
  report.epochs_run = r.epochs_run;
  report.final_loss = r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back();
  report.parameter_count = r.model.parameter_count();
  if (!cfg.str("data.test_path").empty()) {
    const Dataset test = load_config_dataset(cfg, "data.test_path", "data.test_labels");
    report.test_accuracy = accuracy(r.model, test);
  }
  return report;
}

// ---------------------------------------------------------------------------
// attribute / evaluate

struct SampleResult {
  std::size_t index = 0;
  std::size_t label = 0;
  std::size_t predicted = 0;
  std::size_t gradient_evaluations = 0;
  AttributionMap map;
  MetricCurve insertion;
  MetricCurve deletion;
};

struct RunReport {
  std::string method;
  std::map<std::string, std::string> config;
  std::vector<SampleResult> samples;
  double mean_insertion_auc = 0.0;
  double mean_deletion_auc = 0.0;
  std::size_t gradient_evaluations = 0;
  double wall_clock_seconds = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (const SampleResult& s : samples) {
      per.push_back({{"index", s.index},
                     {"label", s.label},
                     {"predicted", s.predicted},
                     {"insertion_auc", s.insertion.auc},
                     {"deletion_auc", s.deletion.auc},
                     {"gradient_evaluations", s.gradient_evaluations}});
    }
    return {{"method", method},
            {"config", config},
            {"samples", per},
            {"mean_insertion_auc", mean_insertion_auc},
            {"mean_deletion_auc", mean_deletion_auc},
            {"gradient_evaluations", gradient_evaluations},
            {"wall_clock_seconds", wall_clock_seconds}};
  }
};

inline LaConfig la_config_from(const ExperimentConfig& cfg, std::uint64_t seed) {
  LaConfig la;
  la.iterations = cfg.count("method.N");
  la.spatial_range = cfg.real("method.s_range");
  if (cfg.str("method.k_targets") != "auto") la.k_targets = cfg.count("method.k_targets");
  la.mode = parse_space_mode(cfg.str("method.mode"));
  la.epsilon_min = cfg.real("method.eps_min");
  if (cfg.str("method.eps_const") != "auto") la.constant_radius = cfg.real("method.eps_const");
  la.attack = parse_attack_type(cfg.str("method.attack"));
  la.credit = parse_targeted_credit(cfg.str("method.credit"));
  la.seed = seed;
  la.record_trace = false;
  return la;
}

// Attribution for one sample. Randomized methods use `seed`.
inline AttributionMap attribute_sample(const ExperimentConfig& cfg, const ModelGraph& model,
                                       const Tensor& x, std::size_t label, std::uint64_t seed,
                                       std::size_t* gradient_evaluations) {
  const std::string& method = cfg.str("method.name");
  const Objective objective = Objective::cross_entropy(label);
  AttributionMap map;
  std::size_t evals = 0;
  if (method == "la") {
    LaResult r = local_attribution(model, x, label, la_config_from(cfg, seed));
    evals = r.gradient_evaluations;
    map = std::move(r.map);
  } else if (method == "sm") {
    map = saliency(model, x, objective, cfg.flag("method.signed"));
    evals = 1;
  } else if (method == "ig") {
    const Tensor baseline = make_baseline(x, parse_baseline_kind(cfg.str("metric.baseline")));
    map = integrated_gradients(model, x, objective, baseline, cfg.count("method.ig_steps"));
    evals = cfg.count("method.ig_steps");
  } else if (method == "sg") {
    map = smoothgrad(model, x, objective, cfg.real("method.sg_sigma"), cfg.count("method.sg_n"),
                     seed);
    evals = cfg.count("method.sg_n");
  } else if (method == "random") {
    map = random_attribution(x.shape(), seed);
  } else {
    throw UsageError("unknown method '" + method + "' (la|sm|ig|sg|random)");
  }
  if (!map.values.all_finite()) throw DomainError("non-finite attribution (" + method + ")");
  if (gradient_evaluations) *gradient_evaluations = evals;
  return map;
}

// Runs fn(i) for i in [0, n) on `threads` workers. Results must be written
// to per-index slots; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline Dataset selected_samples(const ExperimentConfig& cfg) {
  const Dataset all = load_config_dataset(cfg, "data.path", "data.labels");
  const Dataset picked = all.slice(cfg.count("run.offset"), cfg.count("run.samples"));
  if (picked.empty()) throw FormatError("no samples selected");
  return picked;
}

inline std::size_t target_label(const ExperimentConfig& cfg, const ModelGraph& model,
                                const Sample& s) {
  const std::string& mode = cfg.str("method.label");
  if (mode == "true") return s.label;
  if (mode == "predicted") return argmax(forward_eval(model, s.input).data());
  throw UsageError("method.label must be 'predicted' or 'true'");
}

inline std::string sample_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", index);
  return buf;
}

// Writes one .laa + .csv map per sample under <run.out>/attr (and heatmaps
// when run.heatmaps=1). Returns the maps in sample order.
inline std::vector<SampleResult> cmd_attribute(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const ModelGraph model = load_config_model(cfg);
  const Dataset data = selected_samples(cfg);
  const std::size_t offset = cfg.count("run.offset");
  const std::uint64_t seed = cfg.count("run.seed");
  std::vector<SampleResult> out(data.size());
  parallel_for(data.size(), cfg.count("run.threads"), [&](std::size_t i) {
    SampleResult& r = out[i];
    r.index = offset + i;
    r.label = data[i].label;
    r.predicted = argmax(forward_eval(model, data[i].input).data());
    r.map = attribute_sample(cfg, model, data[i].input, target_label(cfg, model, data[i]),
                             split_seed(seed, r.index), &r.gradient_evaluations);
    r.map.sample_id = std::to_string(r.index);
  });
  const fs::path dir = fs::path(cfg.str("run.out")) / "attr";
  fs::create_directories(dir);
  const bool heatmaps = cfg.flag("run.heatmaps");
  if (heatmaps) fs::create_directories(fs::path(cfg.str("run.out")) / "heatmaps");
  for (const SampleResult& r : out) {
    const std::string stem = sample_stem(r.index);
    save_attribution_binary(r.map.values, (dir / (stem + ".laa")).string());
    save_attribution_csv(r.map.values, (dir / (stem + ".csv")).string());
    if (heatmaps && (r.map.values.rank() == 2 || r.map.values.rank() == 3)) {
      const Image img = render_heatmap(r.map.values, r.map.values.shape(),
                                       parse_colormap(cfg.str("run.colormap")));
      write_ppm(img, (fs::path(cfg.str("run.out")) / "heatmaps" / (stem + ".ppm")).string());
      if (png_supported()) {
        write_png(img, (fs::path(cfg.str("run.out")) / "heatmaps" / (stem + ".png")).string());
      }
    }
  }
  return out;
}

inline void write_curve_csv(const MetricCurve& c, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "fraction,probability\n";
  char buf[96];
  for (const CurvePoint& p : c.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fraction, p.probability);
    out << buf;
  }
}

// Attribution + insertion/deletion for every selected sample, in memory.
inline RunReport evaluate_in_memory(const ExperimentConfig& cfg, const ModelGraph& model,
                                    const Dataset& data, std::size_t offset) {
  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t seed = cfg.count("run.seed");
  const BaselineKind baseline_kind = parse_baseline_kind(cfg.str("metric.baseline"));
  const std::size_t n_points = cfg.count("metric.n_points");
  RunReport report;
  report.method = cfg.str("method.name");
  report.config = cfg.values();
  report.samples.resize(data.size());
  parallel_for(data.size(), cfg.count("run.threads"), [&](std::size_t i) {
    SampleResult& r = report.samples[i];
    const Tensor& x = data[i].input;
    r.index = offset + i;
    r.label = data[i].label;
    r.predicted = argmax(forward_eval(model, x).data());
    r.map = attribute_sample(cfg, model, x, target_label(cfg, model, data[i]),
                             split_seed(seed, r.index), &r.gradient_evaluations);
    const Ranking ranking = rank_dimensions(r.map.values);
    const Tensor baseline = make_baseline(x, baseline_kind);
    r.insertion = insertion_curve(model, x, ranking, baseline, n_points);
    r.deletion = deletion_curve(model, x, ranking, baseline, n_points);
  });
  double ins = 0.0, del = 0.0;
  for (const SampleResult& r : report.samples) {
    if (!std::isfinite(r.insertion.auc) || !std::isfinite(r.deletion.auc)) {
      throw DomainError("non-finite AUC for sample " + std::to_string(r.index));
    }
    ins += r.insertion.auc;
    del += r.deletion.auc;
    report.gradient_evaluations += r.gradient_evaluations;
  }
  report.mean_insertion_auc = ins / static_cast<double>(report.samples.size());
  report.mean_deletion_auc = del / static_cast<double>(report.samples.size());
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// Writes <run.out>/report.json, samples.csv and (run.curves=1) per-sample
// curve CSVs.
inline RunReport cmd_evaluate(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const ModelGraph model = load_config_model(cfg);
  const Dataset data = selected_samples(cfg);
  RunReport report = evaluate_in_memory(cfg, model, data, cfg.count("run.offset"));

  const fs::path out = cfg.str("run.out");
  fs::create_directories(out);
  {
    std::ofstream j(out / "report.json", std::ios::trunc);
    j << report.to_json().dump(2) << '\n';
  }
  {
    std::ofstream csv(out / "samples.csv", std::ios::trunc);
    csv << "index,label,predicted,insertion_auc,deletion_auc,gradient_evaluations\n";
    char buf[128];
    for (const SampleResult& r : report.samples) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g,%zu\n", r.index, r.label,
                    r.predicted, r.insertion.auc, r.deletion.auc, r.gradient_evaluations);
      csv << buf;
    }
  }
  if (cfg.flag("run.curves")) {
    fs::create_directories(out / "curves");
    for (const SampleResult& r : report.samples) {
      const std::string stem = sample_stem(r.index);
      write_curve_csv(r.insertion, (out / "curves" / (stem + "_insertion.csv")).string());
      write_curve_csv(r.deletion, (out / "curves" / (stem + "_deletion.csv")).string());
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// ablate

struct AblationRow {
  std::string value;
  double mean_insertion_auc = 0.0;
  double mean_deletion_auc = 0.0;
  std::size_t gradient_evaluations = 0;
};

inline std::string ablation_key(const std::string& param) {
  if (param == "mode") return "method.mode";
  if (param == "attack" || param == "attack_type") return "method.attack";
  if (param == "N") return "method.N";
  if (param == "s_range") return "method.s_range";
  if (param == "k_targets") return "method.k_targets";
  if (param == "credit") return "method.credit";
  throw UsageError("ablate.param must be one of mode, attack, N, s_range, k_targets, credit");
}

// One LA evaluation per sweep value, same samples and seed for every row.
// Writes <run.out>/ablate_<param>.csv.
inline std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const std::string param = cfg.str("ablate.param");
  const std::string key = ablation_key(param);
  const auto values = split(cfg.str("ablate.values"), ',');
  if (values.empty()) throw UsageError("ablate.values is empty");
  const ModelGraph model = load_config_model(cfg);
  const Dataset data = selected_samples(cfg);

  std::vector<AblationRow> rows;
  for (const std::string& v : values) {
    ExperimentConfig run = cfg;
    run.set("method.name", "la");
    run.set(key, v);
    const RunReport r = evaluate_in_memory(run, model, data, cfg.count("run.offset"));
    rows.push_back({v, r.mean_insertion_auc, r.mean_deletion_auc, r.gradient_evaluations});
  }
  const fs::path out = cfg.str("run.out");
  fs::create_directories(out);
  std::ofstream csv(out / ("ablate_" + param + ".csv"), std::ios::trunc);
  csv << param << ",mean_insertion_auc,mean_deletion_auc,gradient_evaluations\n";
  char buf[128];
  for (const AblationRow& row : rows) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%zu\n", row.mean_insertion_auc,
                  row.mean_deletion_auc, row.gradient_evaluations);
    csv << row.value << buf;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// render

inline Image cmd_render(const ExperimentConfig& cfg) {
  const std::string& in = cfg.str("render.input");
  const std::string& out = cfg.str("render.out");
  if (in.empty() || out.empty()) throw UsageError("render.input and render.out are required");
  const Tensor values = load_attribution_binary(in);
  const Shape shape = cfg.str("render.shape").empty() ? values.shape()
                                                      : parse_shape(cfg.str("render.shape"));
  const Image img = render_heatmap(values, shape, parse_colormap(cfg.str("run.colormap")));
  write_image(img, out);
  return img;
}

}  // namespace locattr
