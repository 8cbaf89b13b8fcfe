/* Copyright 2026 The sigmaquant Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <ostream>

#include "CLI11.hpp"
#include "sigmaquant_cli/commands.hpp"

namespace sigmaquant::cli {

namespace {

struct CommandLine {
  std::string config;
  Overrides overrides;
};

using Handler = int (*)(const RunConfig&, std::ostream&);

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-phase mixed-precision quantization planner", "sigmaquant"};
  app.require_subcommand(1);
  CommandLine cl;
  Handler chosen = nullptr;

  auto add = [&](const char* name, const char* help, Handler handler) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", cl.config, "JSON run configuration")->required();
    auto& o = cl.overrides;
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--target-acc", o.target_acc, "Accuracy target in percent");
    sub->add_option("--target-size", o.target_size, "Size target in bytes");
    sub->add_option("--target-bops", o.target_bops, "BOPs target (switches the metric)");
    sub->add_option("--delta-a", o.delta_a, "Accuracy buffer in points");
    sub->add_option("--delta-m", o.delta_m, "Metric buffer in target units");
    sub->add_option("--imax", o.imax, "Phase-1 round cap");
    sub->add_option("--out", o.out, "Output directory");
    sub->callback([&chosen, handler] { chosen = handler; });
    return sub;
  };
  add("train", "Train a float model", cmd_train);
  add("stats", "Per-layer sigma and KL table", cmd_stats)
      ->add_option("--plan", cl.overrides.plan, "Plan whose bits the score uses");
  add("cluster", "Cluster layer sigmas into bitwidth groups", cmd_cluster)
      ->add_option("--lambda", cl.overrides.lambda, "Cluster-size penalty");
  add("plan", "Search a mixed-precision plan", cmd_plan);
  add("quantize", "Write fake-quantized weights for a plan", cmd_quantize)
      ->add_option("--plan", cl.overrides.plan, "Plan file");
  add("evaluate", "Top-1 accuracy, optionally under a plan", cmd_evaluate)
      ->add_option("--plan", cl.overrides.plan, "Plan file");
  add("hw-report", "Shift-add cycles, energy and size of a plan", cmd_hw_report)
      ->add_option("--plan", cl.overrides.plan, "Plan file");
  CLI::App* verify = add("verify-trace", "Replay a planner trace", cmd_verify_trace);
  verify->add_option("--plan", cl.overrides.plan, "Plan file");
  verify->add_option("--trace", cl.overrides.trace, "Trace CSV");

  std::vector<const char*> argv{"sigmaquant"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitError;
  }

  try {
    RunConfig config = load_config(cl.config);
    apply_overrides(config, cl.overrides);
    return chosen(config, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace sigmaquant::cli
