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

#include "sigmaquant_cli/config.hpp"

#include <set>

#include "json.hpp"
#include "sigmaquant/hw_model.hpp"
#include "sigmaquant/io.hpp"

namespace sigmaquant::cli {

namespace {

using nlohmann::json;

void allow_keys(const json& j, const std::string& where, std::set<std::string> keys) {
  if (!j.is_object()) throw Error("config '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    if (!keys.count(item.key())) {
      throw Error("unknown config key '" + where + (where.empty() ? "" : ".") + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

DataSource parse_source(const json& j, const std::string& where,
                        const std::filesystem::path& base) {
  allow_keys(j, where, {"synthetic", "idx"});
  DataSource src;
  if (j.contains("synthetic") == j.contains("idx")) {
    throw Error("config '" + where + "' needs exactly one of 'synthetic' or 'idx'");
  }
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    allow_keys(s, where + ".synthetic", {"seed", "samples", "dims", "classes", "separation"});
    src.kind = DataSource::Kind::Synthetic;
    src.seed = s.at("seed").get<std::uint64_t>();
    src.samples = s.at("samples").get<std::size_t>();
    src.dims = s.at("dims").get<std::size_t>();
    src.classes = s.at("classes").get<std::size_t>();
    src.separation = s.at("separation").get<double>();
  } else {
    const json& s = j.at("idx");
    allow_keys(s, where + ".idx", {"images", "labels"});
    src.kind = DataSource::Kind::Idx;
    src.images = resolve(base, s.at("images").get<std::string>());
    src.labels = resolve(base, s.at("labels").get<std::string>());
  }
  return src;
}

TrainConfig parse_train(const json& j, const std::string& where, TrainConfig cfg) {
  allow_keys(j, where, {"epochs", "batch_size", "learning_rate", "momentum", "optimizer"});
  read(j, "epochs", cfg.epochs);
  read(j, "batch_size", cfg.batch_size);
  read(j, "learning_rate", cfg.learning_rate);
  read(j, "momentum", cfg.momentum);
  if (j.contains("optimizer")) {
    const std::string name = j.at("optimizer").get<std::string>();
    if (name == "sgd") {
      cfg.optimizer = Optimizer::Sgd;
    } else if (name == "adam") {
      cfg.optimizer = Optimizer::Adam;
    } else {
      throw Error("config '" + where + ".optimizer' must be 'sgd' or 'adam'");
    }
  }
  cfg.validate();
  return cfg;
}

LayerSpec parse_layer(const json& j, std::size_t index) {
  const std::string where = "architecture.layers[" + std::to_string(index) + "]";
  allow_keys(j, where, {"kind", "name", "out", "kernel", "stride", "padding"});
  LayerSpec spec;
  spec.kind = parse_layer_kind(j.at("kind").get<std::string>());
  read(j, "name", spec.name);
  read(j, "out", spec.out);
  read(j, "kernel", spec.kernel);
  read(j, "stride", spec.stride);
  read(j, "padding", spec.padding);
  return spec;
}

}  // namespace

Dataset DataSource::load() const {
  if (kind == Kind::Idx) return load_idx_dataset(images, labels);
  return gen_synthetic(seed, samples, dims, classes, separation);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    const json j = json::parse(text);
    allow_keys(j, "", {"seed", "model", "architecture", "data", "train", "planner", "budget",
                       "targets", "cluster", "plan", "trace", "cost_table", "out"});
    if (!j.contains("seed")) throw Error("config field 'seed' is required");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.train.seed = cfg.seed;
    if (j.contains("model")) cfg.model = resolve(base_dir, j.at("model").get<std::string>());
    if (j.contains("architecture")) {
      const json& a = j.at("architecture");
      allow_keys(a, "architecture", {"name", "input_shape", "layers"});
      read(a, "name", cfg.model_name);
      cfg.input_shape = a.at("input_shape").get<Shape>();
      const json& layers = a.at("layers");
      for (std::size_t i = 0; i < layers.size(); ++i) {
        cfg.architecture.push_back(parse_layer(layers[i], i));
      }
    }
    if (j.contains("data")) {
      const json& d = j.at("data");
      allow_keys(d, "data", {"train", "eval"});
      if (d.contains("train")) cfg.train_data = parse_source(d.at("train"), "data.train", base_dir);
      if (d.contains("eval")) cfg.eval_data = parse_source(d.at("eval"), "data.eval", base_dir);
    }
    if (j.contains("train")) cfg.train = parse_train(j.at("train"), "train", cfg.train);

    cfg.qat.learning_rate = 0.01;
    if (j.contains("planner")) {
      const json& p = j.at("planner");
      allow_keys(p, "planner", {"calibration_samples", "clusters", "bitset", "lambda_step", "qat"});
      read(p, "calibration_samples", cfg.calibration_samples);
      read(p, "clusters", cfg.clusters);
      read(p, "bitset", cfg.bitset);
      read(p, "lambda_step", cfg.lambda_step);
      if (p.contains("qat")) cfg.qat = parse_train(p.at("qat"), "planner.qat", cfg.qat);
    }
    if (j.contains("budget")) {
      const json& b = j.at("budget");
      allow_keys(b, "budget", {"phase1_rounds", "phase1_epochs", "phase2_rounds",
                               "phase2_epochs", "layers_per_round", "patience"});
      read(b, "phase1_rounds", cfg.budget.phase1_rounds);
      read(b, "phase1_epochs", cfg.budget.phase1_epochs);
      read(b, "phase2_rounds", cfg.budget.phase2_rounds);
      read(b, "phase2_epochs", cfg.budget.phase2_epochs);
      read(b, "layers_per_round", cfg.budget.layers_per_round);
      read(b, "patience", cfg.budget.patience);
      cfg.budget.validate();
    }
    if (j.contains("targets")) {
      const json& t = j.at("targets");
      allow_keys(t, "targets", {"metric", "accuracy", "accuracy_drop", "value", "fraction",
                                "delta_a", "delta_m", "delta_m_fraction"});
      if (t.contains("metric")) {
        cfg.targets.metric = parse_target_metric(t.at("metric").get<std::string>());
      }
      if (t.contains("accuracy")) cfg.targets.accuracy = t.at("accuracy").get<double>();
      read(t, "accuracy_drop", cfg.targets.accuracy_drop);
      if (t.contains("value")) cfg.targets.value = t.at("value").get<double>();
      read(t, "fraction", cfg.targets.fraction);
      read(t, "delta_a", cfg.targets.delta_a);
      if (t.contains("delta_m")) cfg.targets.delta_m = t.at("delta_m").get<double>();
      read(t, "delta_m_fraction", cfg.targets.delta_m_fraction);
    }
    if (j.contains("cluster")) {
      allow_keys(j.at("cluster"), "cluster", {"lambda"});
      read(j.at("cluster"), "lambda", cfg.cluster_lambda);
    }
    if (j.contains("plan")) cfg.plan = resolve(base_dir, j.at("plan").get<std::string>());
    if (j.contains("trace")) cfg.trace = resolve(base_dir, j.at("trace").get<std::string>());
    if (j.contains("cost_table")) {
      cfg.cost_table = resolve(base_dir, j.at("cost_table").get<std::string>());
    }
    cfg.out = resolve(base_dir, j.value("out", std::string("out")));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
  RunConfig cfg = parse_config(read_file(path), base);
  cfg.source = path;
  return cfg;
}

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.seed) {
    config.seed = *o.seed;
    config.train.seed = *o.seed;
  }
  if (o.target_acc) config.targets.accuracy = *o.target_acc;
  if (o.target_size && o.target_bops) {
    throw Error("--target-size and --target-bops are mutually exclusive");
  }
  if (o.target_size) {
    config.targets.metric = TargetMetric::Size;
    config.targets.value = *o.target_size;
  }
  if (o.target_bops) {
    config.targets.metric = TargetMetric::Bops;
    config.targets.value = *o.target_bops;
  }
  if (o.delta_a) config.targets.delta_a = *o.delta_a;
  if (o.delta_m) config.targets.delta_m = *o.delta_m;
  if (o.imax) config.budget.phase1_rounds = *o.imax;
  if (o.out) config.out = *o.out;
  if (o.lambda) config.cluster_lambda = *o.lambda;
  if (o.plan) config.plan = *o.plan;
  if (o.trace) config.trace = *o.trace;
}

Targets resolve_targets(const TargetSpec& spec, const ModelGraph& model, double float_accuracy) {
  Targets t;
  t.metric = spec.metric;
  t.accuracy = spec.accuracy ? *spec.accuracy : float_accuracy - spec.accuracy_drop;
  t.metric_target = spec.value ? *spec.value
                               : spec.fraction * plan_metric(model, BitPlan::uniform(model, 8, 8),
                                                             spec.metric);
  t.delta_a = spec.delta_a;
  t.delta_m = spec.delta_m ? *spec.delta_m : spec.delta_m_fraction * t.metric_target;
  t.validate();
  return t;
}

}  // namespace sigmaquant::cli
