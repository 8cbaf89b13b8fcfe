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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sigmaquant/bit_plan.hpp"
#include "sigmaquant/dataset.hpp"
#include "sigmaquant/engine.hpp"
#include "sigmaquant/model.hpp"

namespace sigmaquant {

enum class TargetMetric { Size, Bops };

std::string_view to_string(TargetMetric metric);
TargetMetric parse_target_metric(std::string_view text);

/// Accuracy and resource targets with their tolerance buffers. `metric_target`
/// and `delta_m` are in bytes for size targets and in bit-operations for
/// BOPs targets.
struct Targets {
  TargetMetric metric = TargetMetric::Size;
  double accuracy = 0.0;  // percent
  double metric_target = 0.0;
  double delta_a = 1.0;
  double delta_m = 0.0;

  void validate() const;
  friend bool operator==(const Targets&, const Targets&) = default;
};

enum class Zone { BitIncrease, BitDecrease, Transition, Abandon, Iteration, Target };

std::string_view to_string(Zone zone);
Zone parse_zone(std::string_view text);

/// Region of the (accuracy, metric) plane. The checks run in order and the
/// first match wins:
///
///   Target       A >= A_t and M <= M_t
///   BitIncrease  A <  A_t - dA and M <= M_t - dM
///   BitDecrease  A >= A_t + dA and M >  M_t + dM
///   Iteration    at least one of A >= A_t - dA, M <= M_t + dM
///   Abandon      budget_exhausted (both buffered conditions violated)
///   Transition   A >= A_t - 2 dA or M <= M_t + 2 dM
///   BitDecrease  otherwise (far from both targets; shrinking comes first)
Zone classify_zone(double accuracy, double metric, const Targets& t,
                   bool budget_exhausted = false);

/// Phase-1 loop guard: both metrics outside their buffers and rounds left.
bool phase1_continue(double accuracy, double metric, const Targets& t,
                     std::size_t round, std::size_t max_rounds);

/// Phase-2 stop condition: both strict targets hold.
bool phase2_stop(double accuracy, double metric, const Targets& t);

/// True when at least one buffered condition holds.
bool inside_buffer(double accuracy, double metric, const Targets& t);

struct SearchBudget {
  std::size_t phase1_rounds = 3;     // I_max of phase 1
  std::size_t phase1_epochs = 4;     // QAT epochs per phase-1 round
  std::size_t phase2_rounds = 40;    // I_max of phase 2
  std::size_t phase2_epochs = 4;     // QAT epochs per phase-2 round
  std::size_t layers_per_round = 2;  // m
  std::size_t patience = 3;          // P

  void validate() const;
};

/// Wall-clock estimate (phase1_rounds * phase1_epochs + phase2_rounds *
/// phase2_epochs) * epoch_seconds.
double estimate_search_cost(const SearchBudget& budget, double epoch_seconds);

enum class PlanStatus { TargetMet, Infeasible, Reverted };

std::string_view to_string(PlanStatus status);
PlanStatus parse_plan_status(std::string_view text);

/// Process exit code for a planner status (0, 2, 3).
int exit_code(PlanStatus status);

enum class Phase { P1, P2 };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

/// One trace row. `action` is one of
///   init | cluster | increase:<moves> | decrease:<moves> | revert:<round> | stop
/// where <moves> is a ';'-separated list of "<layer>.w" / "<layer>.a" and
/// revert names the earlier round whose bits were restored.
struct TraceRecord {
  std::size_t round = 0;
  Phase phase = Phase::P1;
  std::optional<double> lambda;
  double accuracy = 0.0;
  std::uint64_t size_bytes = 0;
  std::uint64_t bops = 0;
  Zone zone = Zone::Iteration;
  std::string action;
  std::vector<int> bits_w;
  std::vector<int> bits_a;
  std::optional<PlanStatus> status;  // terminal record only

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct PlanTrace {
  std::vector<TraceRecord> records;

  std::size_t next_round() const {
    return records.empty() ? 0 : records.back().round + 1;
  }
};

/// Data and training settings shared by every planner round.
struct PlannerSetup {
  const Dataset* train = nullptr;  // QAT data
  const Dataset* eval = nullptr;   // held-out accuracy
  std::size_t calibration_samples = 1024;  // leading train samples
  TrainConfig qat;                 // epochs and seed are set per round
  std::size_t clusters = 4;        // K, capped at the layer count
  std::vector<int> bitset{2, 4, 6, 8};
  double lambda_step = 0.1;        // initial value and increment

  void validate() const;
};

/// Planner result. `model` holds the weights the plan was evaluated with
/// (quantization-aware trained), `plan` is calibrated.
struct PlanOutcome {
  ModelGraph model;
  BitPlan plan;
  PlanTrace trace;
  PlanStatus status = PlanStatus::Reverted;
  double accuracy = 0.0;
  double metric = 0.0;
};

/// Size in bytes or BOPs of a plan, depending on the target metric.
double plan_metric(const ModelGraph& model, const BitPlan& plan, TargetMetric metric);

/// Sigma of every quantizable layer's weights, in layer order.
std::vector<double> sigma_features(const ModelGraph& model);

/// Bits produced by clustering the layer sigmas of `model` with the given
/// lambda: base bits_a stay 8. Used by phase 1 and by trace replay.
BitPlan cluster_plan(const ModelGraph& model, std::size_t clusters,
                     double lambda, const std::vector<int>& bitset);

/// Phase 1 from a trained float model. The status is Infeasible when both
/// metrics are still outside their buffers after the round budget, and
/// TargetMet or Reverted otherwise (provisional; phase 2 decides).
PlanOutcome phase1(const ModelGraph& model, const PlannerSetup& setup,
                   const Targets& t, const SearchBudget& budget,
                   std::uint64_t seed);

/// Phase 2 refinement continuing `entry` (its trace is extended).
///
/// Each round raises weight bits by 2 on up to m of the most sensitive layers
/// while accuracy is short of its target, and otherwise lowers them on up to
/// m of the least sensitive ones. A move set that would recreate a plan
/// already in the trace is skipped in favour of the next combination in rank
/// order. A round counts toward the patience limit when the metric it acted
/// on did not strictly improve over the previous round.
PlanOutcome phase2(PlanOutcome entry, const PlannerSetup& setup,
                   const Targets& t, const SearchBudget& budget,
                   std::uint64_t seed);

/// Phase 1 followed by phase 2 unless phase 1 is infeasible.
PlanOutcome run_sigmaquant(const ModelGraph& model, const PlannerSetup& setup,
                           const Targets& t, const SearchBudget& budget,
                           std::uint64_t seed);

}  // namespace sigmaquant
