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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sigmaquant/bit_plan.hpp"
#include "sigmaquant/planner.hpp"

namespace sigmaquant {

inline constexpr int kPlanSchemaVersion = 1;
inline constexpr int kTraceSchemaVersion = 1;

/// Contents of a plan file. Targets and status are absent for plans that
/// did not come out of the planner (e.g. uniform plans written by hand).
struct PlanFile {
  BitPlan plan;
  std::optional<Targets> target;
  std::optional<PlanStatus> status;
  std::optional<double> accuracy;

  friend bool operator==(const PlanFile&, const PlanFile&) = default;
};

/// JSON text of a plan. Sizes and BOPs are recomputed from the model.
std::string plan_to_json(const ModelGraph& model, const PlanFile& file);

/// Parses plan JSON and checks it against `model` (names, coverage, bits,
/// per-channel parameter counts).
PlanFile plan_from_json(const std::string& text, const ModelGraph& model);

void save_plan(const std::filesystem::path& path, const ModelGraph& model,
               const PlanFile& file);
PlanFile load_plan(const std::filesystem::path& path, const ModelGraph& model);

/// CSV with a leading "# sigmaquant-trace schema_version=N" line. Per-layer
/// bits are '|'-separated in model order.
std::string trace_to_csv(const PlanTrace& trace);
PlanTrace trace_from_csv(const std::string& text);

struct TraceCheck {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Replays a trace against the float model it was planned from: re-derives
/// every record's bits from its action (re-running the clustering for
/// cluster rows), recomputes size and BOPs, checks round order and lambda
/// progression, and compares the terminal bits and status with the plan file.
TraceCheck verify_trace(const ModelGraph& float_model, const PlanTrace& trace,
                        const PlanFile& plan, std::size_t clusters,
                        const std::vector<int>& bitset);

}  // namespace sigmaquant
