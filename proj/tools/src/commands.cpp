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

#include "sigmaquant_cli/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "sigmaquant/clusterer.hpp"
#include "sigmaquant/hw_model.hpp"
#include "sigmaquant/io.hpp"
#include "sigmaquant/layer_stats.hpp"
#include "sigmaquant/plan_io.hpp"

namespace sigmaquant::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

template <typename T>
const T& require(const std::optional<T>& value, const char* field) {
  if (!value) throw Error(std::string("config field '") + field + "' is required");
  return *value;
}

ModelGraph input_model(const RunConfig& c) { return load_model(require(c.model, "model")); }

Dataset train_set(const RunConfig& c) { return require(c.train_data, "data.train").load(); }
Dataset eval_set(const RunConfig& c) { return require(c.eval_data, "data.eval").load(); }

fs::path out_file(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out);
  return c.out / name;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string join_bits(const std::vector<int>& bits) {
  std::string s;
  for (std::size_t i = 0; i < bits.size(); ++i) s += (i ? "|" : "") + std::to_string(bits[i]);
  return s;
}

PlannerSetup planner_setup(const RunConfig& c, const Dataset& train, const Dataset& eval) {
  PlannerSetup s;
  s.train = &train;
  s.eval = &eval;
  s.calibration_samples = c.calibration_samples;
  s.qat = c.qat;
  s.clusters = c.clusters;
  s.bitset = c.bitset;
  s.lambda_step = c.lambda_step;
  return s;
}

json targets_json(const Targets& t) {
  return {{"metric", std::string(to_string(t.metric))}, {"accuracy", t.accuracy},
          {"value", t.metric_target}, {"delta_a", t.delta_a}, {"delta_m", t.delta_m}};
}

json totals_json(const HwTotals& t) {
  return {{"macs", t.macs}, {"cycles", t.cycles}, {"energy", t.energy},
          {"size_bytes", t.size_bytes}, {"bops", t.bops}};
}

struct ReportRow {
  std::string name;
  std::string bits_w;
  HwTotals totals;
  double area_um2 = 0.0;
};

}  // namespace

int cmd_train(const RunConfig& c, std::ostream& log) {
  ModelGraph model;
  if (!c.architecture.empty()) {
    model = build_model(c.model_name, c.input_shape, c.architecture, c.seed);
  } else if (c.model) {
    model = load_model(*c.model);
  } else {
    throw Error("config needs 'architecture' or 'model' to train");
  }
  const Dataset train = train_set(c);
  const TrainResult result = train_float(model, train, c.train);
  if (result.diverged) throw Error("float training diverged; lower train.learning_rate");

  json summary = {{"schema_version", kSchemaVersion},
                  {"command", "train"},
                  {"epochs", c.train.epochs},
                  {"steps", result.steps},
                  {"final_loss", result.final_loss},
                  {"train_accuracy", evaluate_accuracy(result.model, train).top1_accuracy}};
  if (c.eval_data) {
    summary["eval_accuracy"] = evaluate_accuracy(result.model, c.eval_data->load()).top1_accuracy;
  }
  save_model(result.model, out_file(c, "model") / "model.json");
  write_json(out_file(c, "train.json"), summary);
  log << "trained " << model.name << ": loss " << format_number(result.final_loss);
  if (summary.contains("eval_accuracy")) {
    log << ", eval accuracy " << format_number(summary["eval_accuracy"].get<double>()) << "%";
  }
  log << "\n";
  return 0;
}

int cmd_stats(const RunConfig& c, std::ostream& log) {
  const ModelGraph model = input_model(c);
  std::vector<int> bits(model.quantizable_indices().size(), 8);
  if (c.plan) bits = load_plan(*c.plan, model).plan.weight_bits();
  std::ostringstream csv;
  csv << "# sigmaquant-stats schema_version=" << kSchemaVersion << "\n"
      << "layer,sigma,kl@2,kl@4,kl@6,kl@8,normalized_kl\n";
  for (const SensitivityRecord& r : layer_stats_table(model, bits)) {
    csv << r.layer << ',' << format_number(r.sigma);
    for (int b : kAllowedBits) csv << ',' << format_number(r.kl_at_bits.at(b));
    csv << ',' << format_number(r.normalized_kl) << '\n';
  }
  write_file_atomic(out_file(c, "stats.csv"), csv.str());
  log << csv.str();
  return 0;
}

int cmd_cluster(const RunConfig& c, std::ostream& log) {
  const ModelGraph model = input_model(c);
  const std::vector<double> sigmas = sigma_features(model);
  const std::size_t k = std::min({c.clusters, sigmas.size(), c.bitset.size()});
  const ClusterAssignment a = adaptive_kmeans(sigmas, k, c.cluster_lambda, c.seed);
  const BitPlan plan = cluster_plan(model, c.clusters, c.cluster_lambda, c.bitset);

  json layers = json::array();
  for (std::size_t i = 0; i < plan.layers.size(); ++i) {
    layers.push_back({{"name", plan.layers[i].name},
                      {"sigma", sigmas[i]},
                      {"cluster", a.assignment[i]},
                      {"centroid", a.centroids[a.assignment[i]]},
                      {"bits_w", plan.layers[i].bits_w}});
  }
  write_json(out_file(c, "cluster.json"), {{"schema_version", kSchemaVersion},
                                           {"lambda", c.cluster_lambda},
                                           {"k", k},
                                           {"objective", a.objective},
                                           {"rounds", a.rounds},
                                           {"layers", layers}});
  save_plan(out_file(c, "cluster_plan.json"), model, PlanFile{plan, {}, {}, {}});
  log << "clustered " << plan.layers.size() << " layers into " << k << " groups: "
      << plan.describe() << "\n";
  return 0;
}

int cmd_plan(const RunConfig& c, std::ostream& log) {
  const ModelGraph model = input_model(c);
  const Dataset train = train_set(c);
  const Dataset eval = eval_set(c);
  const double float_accuracy = evaluate_accuracy(model, eval).top1_accuracy;
  const Targets targets = resolve_targets(c.targets, model, float_accuracy);
  const PlanOutcome out =
      run_sigmaquant(model, planner_setup(c, train, eval), targets, c.budget, c.seed);

  save_plan(out_file(c, "plan.json"), out.model,
            PlanFile{out.plan, targets, out.status, out.accuracy});
  write_file_atomic(out_file(c, "trace.csv"), trace_to_csv(out.trace));
  save_model(out.model, out_file(c, "model") / "model.json");
  const std::uint64_t size = model_size_bytes(out.model, out.plan);
  const std::uint64_t ops = bops(out.model, out.plan);
  write_json(out_file(c, "summary.json"), {{"schema_version", kSchemaVersion},
                                           {"status", std::string(to_string(out.status))},
                                           {"accuracy", out.accuracy},
                                           {"float_accuracy", float_accuracy},
                                           {"size_bytes", size},
                                           {"bops", ops},
                                           {"rounds", out.trace.records.back().round},
                                           {"bits", out.plan.describe()},
                                           {"target", targets_json(targets)}});
  log << "status=" << to_string(out.status) << " accuracy=" << format_number(out.accuracy)
      << " size_bytes=" << size << " bops=" << ops << " bits=" << out.plan.describe() << "\n";
  return exit_code(out.status);
}

int cmd_quantize(const RunConfig& c, std::ostream& log) {
  ModelGraph model = input_model(c);
  PlanFile file = load_plan(require(c.plan, "plan"), model);
  if (!file.plan.calibrated()) {
    if (!c.train_data) throw Error("plan is not calibrated and config field 'data.train' is missing");
    const Dataset train = c.train_data->load();
    file.plan = calibrate(model, train.slice(0, std::min(c.calibration_samples, train.size())),
                          file.plan);
  }
  for (const LayerPlan& lp : file.plan.layers) {
    Tensor& w = *model.layers[lp.layer_index].weights;
    w = quantize_dequantize(w, *lp.weight_qparams);
  }
  const fs::path dir = out_file(c, "quantized");
  save_model(model, dir / "model.json");
  save_plan(dir / "plan.json", model, file);
  log << "wrote fake-quantized weights for " << file.plan.describe() << " to " << dir.string()
      << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& c, std::ostream& log) {
  const ModelGraph model = input_model(c);
  const Dataset eval = eval_set(c);
  std::optional<PlanFile> file;
  if (c.plan) file = load_plan(*c.plan, model);
  const EvalReport r = evaluate_accuracy(model, eval, file ? &file->plan : nullptr);
  write_json(out_file(c, "eval.json"), {{"schema_version", kSchemaVersion},
                                        {"accuracy", r.top1_accuracy},
                                        {"loss", r.loss},
                                        {"count", r.count},
                                        {"correct", r.correct},
                                        {"quantized", file.has_value()}});
  log << "accuracy=" << format_number(r.top1_accuracy) << " loss=" << format_number(r.loss)
      << " samples=" << r.count << "\n";
  return 0;
}

int cmd_hw_report(const RunConfig& c, std::ostream& log) {
  const ModelGraph model = input_model(c);
  const HwCostTable table = c.cost_table ? load_cost_table(*c.cost_table) : HwCostTable::defaults();
  const PlanFile file = load_plan(require(c.plan, "plan"), model);
  const HwReport plan_report = energy_report(model, freeze_weight_qparams(model, file.plan), table);
  const double sa_area = table.unit("shift_add").area_um2;
  const double i8_area = table.unit("int8").area_um2;

  std::vector<ReportRow> rows;
  rows.push_back({"plan", join_bits(file.plan.weight_bits()), plan_report.totals, sa_area});
  rows.push_back({"int8_baseline", "8", plan_report.int8_baseline, i8_area});
  for (int b : kAllowedBits) {
    const HwReport u =
        energy_report(model, freeze_weight_qparams(model, BitPlan::uniform(model, b, 8)), table);
    rows.push_back({"A8W" + std::to_string(b), std::to_string(b), u.totals, sa_area});
  }

  const HwTotals& base = plan_report.int8_baseline;
  auto ratio = [](double v, double b) { return v / b; };
  std::ostringstream csv;
  csv << "# sigmaquant-hw-report schema_version=" << kSchemaVersion
      << " energy_unit=" << table.energy_unit
      << " placeholder_energies=" << (table.placeholder_energies ? "true" : "false") << "\n"
      << "row,bits_w,macs,cycles,energy,size_bytes,bops,cycles_ratio,energy_ratio,size_ratio,"
         "bops_ratio,area_um2,area_ratio\n";
  json jrows = json::array();
  for (const ReportRow& r : rows) {
    const double cr = ratio(static_cast<double>(r.totals.cycles), static_cast<double>(base.cycles));
    const double er = ratio(r.totals.energy, base.energy);
    const double sr =
        ratio(static_cast<double>(r.totals.size_bytes), static_cast<double>(base.size_bytes));
    const double br = ratio(static_cast<double>(r.totals.bops), static_cast<double>(base.bops));
    const double ar = ratio(r.area_um2, i8_area);
    csv << r.name << ',' << r.bits_w << ',' << r.totals.macs << ',' << r.totals.cycles << ','
        << format_number(r.totals.energy) << ',' << r.totals.size_bytes << ',' << r.totals.bops
        << ',' << format_number(cr) << ',' << format_number(er) << ',' << format_number(sr) << ','
        << format_number(br) << ',' << format_number(r.area_um2) << ',' << format_number(ar)
        << '\n';
    json row = totals_json(r.totals);
    row["row"] = r.name;
    row["bits_w"] = r.bits_w;
    row["cycles_ratio"] = cr;
    row["energy_ratio"] = er;
    row["size_ratio"] = sr;
    row["bops_ratio"] = br;
    row["area_um2"] = r.area_um2;
    row["area_ratio"] = ar;
    jrows.push_back(std::move(row));
  }
  json layers = json::array();
  for (const LayerHw& l : plan_report.layers) {
    layers.push_back({{"name", l.name}, {"bits_w", l.bits_w}, {"bits_a", l.bits_a},
                      {"macs", l.macs}, {"cycles", l.cycles}, {"energy", l.energy},
                      {"size_bytes", l.size_bytes}, {"bops", l.bops}});
  }
  write_json(out_file(c, "report.json"),
             {{"schema_version", kSchemaVersion},
              {"energy_unit", table.energy_unit},
              {"placeholder_energies", table.placeholder_energies},
              {"area_ratio", plan_report.area_ratio},
              {"rows", jrows},
              {"plan_layers", layers}});
  write_file_atomic(out_file(c, "report.csv"), csv.str());
  log << csv.str();
  return 0;
}

int cmd_verify_trace(const RunConfig& c, std::ostream& log) {
  const ModelGraph model = input_model(c);
  const PlanFile file = load_plan(require(c.plan, "plan"), model);
  const PlanTrace trace = trace_from_csv(read_file(require(c.trace, "trace")));
  const TraceCheck check = verify_trace(model, trace, file, c.clusters, c.bitset);
  if (check.ok) {
    log << "trace ok: " << trace.records.size() << " records replay to " << file.plan.describe()
        << "\n";
    return 0;
  }
  for (const std::string& p : check.problems) log << "trace problem: " << p << "\n";
  return kExitError;
}

}  // namespace sigmaquant::cli
