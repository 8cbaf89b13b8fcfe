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

#include "sigmaquant/plan_io.hpp"

#include <charconv>
#include <cstdlib>
#include <map>
#include <sstream>

#include "json.hpp"
#include "sigmaquant/clusterer.hpp"
#include "sigmaquant/hw_model.hpp"
#include "sigmaquant/io.hpp"

namespace sigmaquant {

namespace {

using nlohmann::json;

constexpr const char* kTraceColumns =
    "round,phase,lambda,accuracy,size_bytes,bops,zone,action,bits_w,bits_a,status";

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string join_bits(const std::vector<int>& bits) {
  std::string out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(bits[i]);
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& text, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text, const char* what) {
  if (text.empty()) throw Error(std::string("empty ") + what);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw Error(std::string("bad ") + what + " '" + text + "'");
  }
  return v;
}

std::vector<int> parse_bits(const std::string& text) {
  std::vector<int> out;
  if (text.empty()) return out;
  for (const std::string& part : split(text, '|')) out.push_back(parse_integer<int>(part, "bits"));
  return out;
}

json targets_json(const Targets& t) {
  return {{"metric", std::string(to_string(t.metric))},
          {"accuracy", t.accuracy},
          {"value", t.metric_target},
          {"delta_a", t.delta_a},
          {"delta_m", t.delta_m}};
}

Targets targets_from(const json& j) {
  Targets t;
  t.metric = parse_target_metric(j.at("metric").get<std::string>());
  t.accuracy = j.at("accuracy").get<double>();
  t.metric_target = j.at("value").get<double>();
  t.delta_a = j.at("delta_a").get<double>();
  t.delta_m = j.at("delta_m").get<double>();
  t.validate();
  return t;
}

}  // namespace

std::string plan_to_json(const ModelGraph& model, const PlanFile& file) {
  file.plan.validate(model);
  json layers = json::array();
  for (const LayerPlan& lp : file.plan.layers) {
    json row = {{"name", lp.name}, {"bits_w", lp.bits_w}, {"bits_a", lp.bits_a}};
    if (lp.weight_qparams) {
      json scales = json::array();
      json degenerate = json::array();
      for (std::size_t c = 0; c < lp.weight_qparams->channels.size(); ++c) {
        const QuantParams& qp = lp.weight_qparams->channels[c];
        scales.push_back(qp.scale);
        if (qp.degenerate) degenerate.push_back(c);
      }
      row["weight"] = {{"scales", scales},
                       {"zero_point", 0},
                       {"degenerate_channels", degenerate}};
    }
    if (lp.act_qparams) {
      row["activation"] = {{"lo", lp.act_qparams->lo},
                           {"hi", lp.act_qparams->hi},
                           {"scale", lp.act_qparams->scale()},
                           {"zero_point", lp.act_qparams->zero_point()}};
    }
    layers.push_back(std::move(row));
  }
  json j = {{"schema_version", kPlanSchemaVersion},
            {"model", model.name},
            {"size_bytes", model_size_bytes(model, file.plan)},
            {"bops", bops(model, file.plan)},
            {"layers", layers}};
  if (file.target) j["target"] = targets_json(*file.target);
  if (file.status) j["status"] = std::string(to_string(*file.status));
  if (file.accuracy) j["accuracy"] = *file.accuracy;
  return j.dump(2) + "\n";
}

PlanFile plan_from_json(const std::string& text, const ModelGraph& model) {
  PlanFile file;
  try {
    const json j = json::parse(text);
    if (j.value("schema_version", 0) != kPlanSchemaVersion) {
      throw Error("unsupported plan schema_version");
    }
    if (j.contains("target")) file.target = targets_from(j.at("target"));
    if (j.contains("status")) file.status = parse_plan_status(j.at("status").get<std::string>());
    if (j.contains("accuracy")) file.accuracy = j.at("accuracy").get<double>();

    std::map<std::string, std::size_t> index_of;
    for (std::size_t idx : model.quantizable_indices()) index_of[model.layers[idx].name] = idx;
    for (const json& row : j.at("layers")) {
      LayerPlan lp;
      lp.name = row.at("name").get<std::string>();
      auto it = index_of.find(lp.name);
      if (it == index_of.end()) throw Error("plan layer '" + lp.name + "' is not in the model");
      lp.layer_index = it->second;
      lp.bits_w = row.at("bits_w").get<int>();
      lp.bits_a = row.at("bits_a").get<int>();
      require_allowed_bits(lp.bits_w);
      require_allowed_bits(lp.bits_a);
      if (row.contains("weight")) {
        const json& w = row.at("weight");
        const auto scales = w.at("scales").get<std::vector<double>>();
        if (scales.size() != model.layers[lp.layer_index].output_channels()) {
          throw Error("plan layer '" + lp.name + "' has " + std::to_string(scales.size()) +
                      " weight scales for " +
                      std::to_string(model.layers[lp.layer_index].output_channels()) +
                      " channels");
        }
        ChannelQuantParams cqp;
        const int q = symmetric_qmax(lp.bits_w);
        for (double s : scales) {
          if (!(s > 0.0)) throw Error("plan layer '" + lp.name + "' has a non-positive scale");
          cqp.channels.push_back(QuantParams{lp.bits_w, s, 0, -q, q, false});
        }
        for (const json& c : w.value("degenerate_channels", json::array())) {
          cqp.channels.at(c.get<std::size_t>()).degenerate = true;
        }
        lp.weight_qparams = std::move(cqp);
      }
      if (row.contains("activation")) {
        const json& a = row.at("activation");
        lp.act_qparams = ActQuantParams{lp.bits_a, a.at("lo").get<double>(),
                                        a.at("hi").get<double>()};
      }
      file.plan.layers.push_back(std::move(lp));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed plan: ") + e.what());
  }
  file.plan.validate(model);
  return file;
}

void save_plan(const std::filesystem::path& path, const ModelGraph& model,
               const PlanFile& file) {
  write_file_atomic(path, plan_to_json(model, file));
}

PlanFile load_plan(const std::filesystem::path& path, const ModelGraph& model) {
  return plan_from_json(read_file(path), model);
}

std::string trace_to_csv(const PlanTrace& trace) {
  std::string out = "# sigmaquant-trace schema_version=" +
                    std::to_string(kTraceSchemaVersion) + "\n" + kTraceColumns + "\n";
  for (const TraceRecord& r : trace.records) {
    out += std::to_string(r.round) + ',' + std::string(to_string(r.phase)) + ',' +
           (r.lambda ? format_number(*r.lambda) : "") + ',' + format_number(r.accuracy) +
           ',' + std::to_string(r.size_bytes) + ',' + std::to_string(r.bops) + ',' +
           std::string(to_string(r.zone)) + ',' + r.action + ',' + join_bits(r.bits_w) +
           ',' + join_bits(r.bits_a) + ',' +
           (r.status ? std::string(to_string(*r.status)) : "") + '\n';
  }
  return out;
}

PlanTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "# sigmaquant-trace schema_version=" + std::to_string(kTraceSchemaVersion)) {
    throw Error("trace does not start with a supported schema line");
  }
  if (!std::getline(in, line) || line != kTraceColumns) {
    throw Error("trace header mismatch");
  }
  PlanTrace trace;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 11) {
      throw Error("trace line " + std::to_string(line_no) + " has " +
                  std::to_string(f.size()) + " fields");
    }
    TraceRecord r;
    r.round = parse_integer<std::size_t>(f[0], "round");
    r.phase = parse_phase(f[1]);
    if (!f[2].empty()) r.lambda = parse_double(f[2], "lambda");
    r.accuracy = parse_double(f[3], "accuracy");
    r.size_bytes = parse_integer<std::uint64_t>(f[4], "size_bytes");
    r.bops = parse_integer<std::uint64_t>(f[5], "bops");
    r.zone = parse_zone(f[6]);
    r.action = f[7];
    r.bits_w = parse_bits(f[8]);
    r.bits_a = parse_bits(f[9]);
    if (!f[10].empty()) r.status = parse_plan_status(f[10]);
    trace.records.push_back(std::move(r));
  }
  return trace;
}

TraceCheck verify_trace(const ModelGraph& float_model, const PlanTrace& trace,
                        const PlanFile& plan, std::size_t clusters,
                        const std::vector<int>& bitset) {
  TraceCheck check;
  auto fail = [&](std::size_t round, const std::string& what) {
    check.ok = false;
    check.problems.push_back("round " + std::to_string(round) + ": " + what);
  };
  if (trace.records.empty()) {
    check.ok = false;
    check.problems.push_back("trace is empty");
    return check;
  }

  std::map<std::string, std::size_t> position;
  BitPlan bits = BitPlan::uniform(float_model, 8, 8);
  for (std::size_t i = 0; i < bits.layers.size(); ++i) position[bits.layers[i].name] = i;
  std::map<std::size_t, BitPlan> history;
  std::optional<double> last_lambda;

  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const TraceRecord& r = trace.records[i];
    if (i > 0 && r.round <= trace.records[i - 1].round) fail(r.round, "round not increasing");
    const bool last = i + 1 == trace.records.size();
    if (r.status.has_value() != last) fail(r.round, "status must appear on the final row only");

    const std::string& a = r.action;
    try {
      if (a == "init") {
        bits = BitPlan::uniform(float_model, 8, 8);
      } else if (a == "cluster") {
        if (!r.lambda) throw Error("cluster row without lambda");
        if (last_lambda && !(*r.lambda > *last_lambda)) throw Error("lambda not increasing");
        last_lambda = r.lambda;
        bits = cluster_plan(float_model, clusters, *r.lambda, bitset);
      } else if (a.rfind("increase:", 0) == 0 || a.rfind("decrease:", 0) == 0) {
        const int delta = a[0] == 'i' ? 2 : -2;
        for (const std::string& move : split(a.substr(9), ';')) {
          const auto dot = move.rfind('.');
          if (dot == std::string::npos) throw Error("bad move '" + move + "'");
          auto it = position.find(move.substr(0, dot));
          if (it == position.end()) throw Error("unknown layer in move '" + move + "'");
          const std::string kind = move.substr(dot + 1);
          if (kind != "w" && kind != "a") throw Error("bad move '" + move + "'");
          int& b = kind == "w" ? bits.layers[it->second].bits_w : bits.layers[it->second].bits_a;
          b += delta;
          if (!is_allowed_bits(b)) throw Error("move '" + move + "' leaves the bit set");
        }
      } else if (a.rfind("revert:", 0) == 0) {
        const auto target = parse_integer<std::size_t>(a.substr(7), "revert round");
        auto it = history.find(target);
        if (it == history.end()) throw Error("revert to unknown round " + a.substr(7));
        bits = it->second;
      } else if (a != "stop") {
        throw Error("unknown action '" + a + "'");
      }
    } catch (const Error& e) {
      fail(r.round, e.what());
      continue;
    }

    if (bits.weight_bits() != r.bits_w || bits.act_bits() != r.bits_a) {
      fail(r.round, "recorded bits " + join_bits(r.bits_w) + " / " + join_bits(r.bits_a) +
                        " differ from replayed " + join_bits(bits.weight_bits()) + " / " +
                        join_bits(bits.act_bits()));
    }
    if (model_size_bytes(float_model, bits) != r.size_bytes) fail(r.round, "size_bytes mismatch");
    if (sigmaquant::bops(float_model, bits) != r.bops) fail(r.round, "bops mismatch");
    history[r.round] = bits;
  }

  const TraceRecord& final_row = trace.records.back();
  if (!plan.plan.same_bits(bits)) {
    fail(final_row.round, "final replayed bits differ from the plan file");
  }
  if (plan.status && final_row.status && *plan.status != *final_row.status) {
    fail(final_row.round, "plan status differs from the trace status");
  }
  return check;
}

}  // namespace sigmaquant
