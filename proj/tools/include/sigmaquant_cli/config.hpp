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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sigmaquant/dataset.hpp"
#include "sigmaquant/engine.hpp"
#include "sigmaquant/model.hpp"
#include "sigmaquant/planner.hpp"

namespace sigmaquant::cli {

/// Where a dataset comes from: a seeded generator or a pair of IDX files.
struct DataSource {
  enum class Kind { Synthetic, Idx } kind = Kind::Synthetic;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t dims = 0;
  std::size_t classes = 0;
  double separation = 0.0;
  std::filesystem::path images;
  std::filesystem::path labels;

  Dataset load() const;
};

/// Planner targets as written in a config: absolute values win over the
/// relative forms, which are resolved against the float model at run time.
struct TargetSpec {
  TargetMetric metric = TargetMetric::Size;
  std::optional<double> accuracy;             // percent
  double accuracy_drop = 1.0;                 // points below float accuracy
  std::optional<double> value;                // bytes or BOPs
  double fraction = 0.75;                     // of the uniform 8/8 metric
  double delta_a = 1.0;
  std::optional<double> delta_m;              // absolute
  double delta_m_fraction = 0.05;             // of the metric target
};

struct RunConfig {
  std::filesystem::path source;  // config file, for messages
  std::uint64_t seed = 0;

  std::optional<std::filesystem::path> model;  // manifest to load
  std::string model_name = "model";
  Shape input_shape;
  std::vector<LayerSpec> architecture;

  std::optional<DataSource> train_data;
  std::optional<DataSource> eval_data;

  TrainConfig train;  // float training
  TrainConfig qat;    // per-round QAT (epochs and seed set by the planner)
  std::size_t calibration_samples = 1024;
  std::size_t clusters = 4;
  std::vector<int> bitset{2, 4, 6, 8};
  double lambda_step = 0.1;
  double cluster_lambda = 0.1;  // for the cluster command

  TargetSpec targets;
  SearchBudget budget;

  std::optional<std::filesystem::path> plan;
  std::optional<std::filesystem::path> trace;
  std::optional<std::filesystem::path> cost_table;
  std::filesystem::path out = "out";
};

/// Parses JSON config text. Relative paths resolve against `base_dir`.
/// Unknown keys are errors so that typos do not silently fall back to
/// defaults.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Command-line overrides; unset fields leave the config untouched.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> target_acc;
  std::optional<double> target_size;
  std::optional<double> target_bops;
  std::optional<double> delta_a;
  std::optional<double> delta_m;
  std::optional<std::size_t> imax;
  std::optional<std::string> out;
  std::optional<double> lambda;
  std::optional<std::string> plan;
  std::optional<std::string> trace;
};

void apply_overrides(RunConfig& config, const Overrides& o);

/// Absolute targets for a float model: relative forms are resolved with
/// `float_accuracy` and the uniform 8/8 metric of `model`.
Targets resolve_targets(const TargetSpec& spec, const ModelGraph& model, double float_accuracy);

}  // namespace sigmaquant::cli
