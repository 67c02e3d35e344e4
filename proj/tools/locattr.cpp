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

// locattr: train small classifiers, attribute their decisions and score the
// attributions with insertion/deletion curves.
//
//   locattr train     --config digits.cfg
//   locattr evaluate  --config digits.cfg --method.name=sm --run.samples=100
//
// Every configuration key is also a flag of the same name; flags override
// the config file.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "locattr/experiment.hpp"

namespace {

struct Subcommand {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_config_flags(Subcommand& sub) {
  sub.app->add_option("--config", sub.config_path, "key=value configuration file");
  for (const auto& [key, def] : locattr::config_defaults()) {
    sub.app->add_option("--" + key, sub.overrides[key],
                        def.empty() ? std::string("(no default)") : "default: " + def);
  }
}

locattr::ExperimentConfig resolve(const Subcommand& sub) {
  locattr::ExperimentConfig cfg;
  if (!sub.config_path.empty()) cfg.load_file(sub.config_path);
  for (const auto& [key, value] : sub.overrides) {
    if (sub.app->count("--" + key) > 0) cfg.set(key, value);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local attribution toolkit"};
  app.require_subcommand(1);
  std::map<std::string, Subcommand> subs;
  for (const char* name : {"train", "attribute", "evaluate", "ablate", "render"}) {
    Subcommand& s = subs[name];
    s.app = app.add_subcommand(name);
    add_config_flags(s);
  }
  subs["train"].app->description("train a classifier and write a LAW1 weight file");
  subs["attribute"].app->description("write one attribution map per sample");
  subs["evaluate"].app->description("insertion/deletion AUCs and report.json");
  subs["ablate"].app->description("sweep one LA parameter, one CSV row per value");
  subs["render"].app->description("render an attribution map as a PPM/PNG heatmap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (subs["train"].app->parsed()) {
      const auto report = locattr::cmd_train(resolve(subs["train"]));
      std::cout << report.to_json().dump(2) << '\n';
    } else if (subs["attribute"].app->parsed()) {
      const auto cfg = resolve(subs["attribute"]);
      const auto results = locattr::cmd_attribute(cfg);
      std::cout << "wrote " << results.size() << " attribution maps to "
                << cfg.str("run.out") << "/attr\n";
    } else if (subs["evaluate"].app->parsed()) {
      const auto cfg = resolve(subs["evaluate"]);
      const auto report = locattr::cmd_evaluate(cfg);
      nlohmann::json summary{{"method", report.method},
                             {"samples", report.samples.size()},
                             {"mean_insertion_auc", report.mean_insertion_auc},
                             {"mean_deletion_auc", report.mean_deletion_auc},
                             {"gradient_evaluations", report.gradient_evaluations},
                             {"report", cfg.str("run.out") + "/report.json"}};
      std::cout << summary.dump(2) << '\n';
    } else if (subs["ablate"].app->parsed()) {
      const auto cfg = resolve(subs["ablate"]);
      for (const auto& row : locattr::cmd_ablate(cfg)) {
        std::cout << cfg.str("ablate.param") << '=' << row.value
                  << " insertion=" << row.mean_insertion_auc
                  << " deletion=" << row.mean_deletion_auc
                  << " evals=" << row.gradient_evaluations << '\n';
      }
    } else if (subs["render"].app->parsed()) {
      const auto cfg = resolve(subs["render"]);
      const auto img = locattr::cmd_render(cfg);
      std::cout << "wrote " << img.width << 'x' << img.height << " heatmap to "
                << cfg.str("render.out") << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "locattr: " << e.what() << '\n';
    return locattr::exit_code_for(e);
  }
  return 0;
}
