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

#include "sigmaquant/planner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "sigmaquant/clusterer.hpp"
#include "sigmaquant/hw_model.hpp"
#include "sigmaquant/layer_stats.hpp"

namespace sigmaquant {

namespace {

constexpr double kScoreFloor = 1e-6;

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::pair<Enum, const char*> (&names)[N],
                const char* what) {
  for (const auto& [value, name] : names) {
    if (text == name) return value;
  }
  throw Error(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

template <typename Enum, std::size_t N>
std::string_view enum_name(Enum value, const std::pair<Enum, const char*> (&names)[N]) {
  for (const auto& [v, name] : names) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::pair<TargetMetric, const char*> kMetricNames[] = {
    {TargetMetric::Size, "size"}, {TargetMetric::Bops, "bops"}};
constexpr std::pair<Zone, const char*> kZoneNames[] = {
    {Zone::BitIncrease, "BitIncrease"}, {Zone::BitDecrease, "BitDecrease"},
    {Zone::Transition, "Transition"},   {Zone::Abandon, "Abandon"},
    {Zone::Iteration, "Iteration"},     {Zone::Target, "Target"}};
constexpr std::pair<PlanStatus, const char*> kStatusNames[] = {
    {PlanStatus::TargetMet, "TargetMet"},
    {PlanStatus::Infeasible, "Infeasible"},
    {PlanStatus::Reverted, "Reverted"}};
constexpr std::pair<Phase, const char*> kPhaseNames[] = {{Phase::P1, "P1"},
                                                         {Phase::P2, "P2"}};

/// A model, its calibrated plan and where it landed.
struct State {
  ModelGraph model;
  BitPlan plan;
  double accuracy = 0.0;
  double metric = 0.0;
  std::size_t round = 0;
};

Dataset calibration_set(const PlannerSetup& setup) {
  const Dataset& train = *setup.train;
  return train.slice(0, std::min(train.size(), setup.calibration_samples));
}

TraceRecord make_record(const State& s, Phase phase, std::optional<double> lambda,
                        Zone zone, std::string action, const ModelGraph& model) {
  TraceRecord r;
  r.round = s.round;
  r.phase = phase;
  r.lambda = lambda;
  r.accuracy = s.accuracy;
  r.size_bytes = model_size_bytes(model, s.plan);
  r.bops = bops(model, s.plan);
  r.zone = zone;
  r.action = std::move(action);
  r.bits_w = s.plan.weight_bits();
  r.bits_a = s.plan.act_bits();
  return r;
}

/// Calibrates `bits` on `start`, runs QAT and evaluates the result.
State train_round(const ModelGraph& start, const BitPlan& bits,
                  const PlannerSetup& setup, const Targets& t, std::size_t epochs,
                  std::uint64_t seed, std::size_t round, bool* diverged) {
  const Dataset calib = calibration_set(setup);
  BitPlan plan = calibrate(start, calib, bits.bits_only());
  TrainConfig cfg = setup.qat;
  cfg.epochs = epochs;
  cfg.seed = seed + round;
  TrainResult res = qat_epochs(start, plan, *setup.train, cfg);
  if (diverged) *diverged = res.diverged;
  State s;
  s.model = std::move(res.model);
  s.plan = std::move(plan);
  s.accuracy = evaluate_accuracy(s.model, *setup.eval, &s.plan).top1_accuracy;
  s.metric = plan_metric(s.model, s.plan, t.metric);
  s.round = round;
  return s;
}

double violation(const State& s, const Targets& t) {
  return std::max(0.0, t.accuracy - s.accuracy) / std::max(t.accuracy, 1.0) +
         std::max(0.0, s.metric - t.metric_target) / t.metric_target;
}

int standing(const State& s, const Targets& t) {
  if (phase2_stop(s.accuracy, s.metric, t)) return 2;
  return inside_buffer(s.accuracy, s.metric, t) ? 1 : 0;
}

bool better(const State& a, const State& b, const Targets& t) {
  const int sa = standing(a, t), sb = standing(b, t);
  if (sa != sb) return sa > sb;
  return violation(a, t) < violation(b, t);
}

struct Move {
  std::size_t plan_pos;
  bool weight;  // false: activation bits
};

std::string describe_moves(const BitPlan& plan, const std::vector<Move>& moves) {
  std::string out;
  for (const Move& m : moves) {
    if (!out.empty()) out += ';';
    out += plan.layers[m.plan_pos].name + (m.weight ? ".w" : ".a");
  }
  return out;
}

/// Plan positions ordered by sensitivity score (descending when
/// `highest_first`), lower layer index first among equal scores.
std::vector<std::size_t> by_score(const std::vector<SensitivityRecord>& scores,
                                  bool highest_first) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return highest_first ? scores[a].normalized_kl > scores[b].normalized_kl
                         : scores[a].normalized_kl < scores[b].normalized_kl;
  });
  return order;
}

/// Every eligible increase, most sensitive layer first.
std::vector<Move> rank_increase(const ModelGraph& model, const BitPlan& plan,
                                const Targets& t) {
  const auto scores = sensitivity_scores(model, plan);
  std::vector<Move> moves;
  for (std::size_t pos : by_score(scores, true)) {
    const LayerPlan& lp = plan.layers[pos];
    if (lp.bits_w < 8) {
      moves.push_back({pos, true});
    } else if (t.metric == TargetMetric::Bops && lp.bits_a < 8) {
      moves.push_back({pos, false});
    }
  }
  return moves;
}

/// Every eligible decrease, least sensitive (or, for BOPs, most BOPs saved
/// per unit of sensitivity) first.
std::vector<Move> rank_decrease(const ModelGraph& model, const BitPlan& plan,
                                const Targets& t) {
  const auto scores = sensitivity_scores(model, plan);
  std::vector<Move> moves;
  if (t.metric == TargetMetric::Size) {
    for (std::size_t pos : by_score(scores, false)) {
      if (plan.layers[pos].bits_w > 2) moves.push_back({pos, true});
    }
    return moves;
  }
  struct Candidate {
    Move move;
    double merit;
  };
  std::vector<Candidate> candidates;
  for (std::size_t pos = 0; pos < plan.layers.size(); ++pos) {
    const LayerPlan& lp = plan.layers[pos];
    const double macs = static_cast<double>(macs_per_layer(model, lp.layer_index));
    const double score = scores[pos].normalized_kl + kScoreFloor;
    if (lp.bits_w > 2) candidates.push_back({{pos, true}, 2.0 * lp.bits_a * macs / score});
    if (lp.bits_a > 2) candidates.push_back({{pos, false}, 2.0 * lp.bits_w * macs / score});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.merit > b.merit; });
  for (const Candidate& c : candidates) moves.push_back(c.move);
  return moves;
}

BitPlan apply_moves(const BitPlan& plan, const std::vector<Move>& moves, int delta) {
  BitPlan out = plan.bits_only();
  for (const Move& m : moves) {
    int& bits = m.weight ? out.layers[m.plan_pos].bits_w : out.layers[m.plan_pos].bits_a;
    bits = std::clamp(bits + delta, 2, 8);
  }
  return out;
}

using BitsKey = std::pair<std::vector<int>, std::vector<int>>;

BitsKey bits_key(const BitPlan& plan) {
  BitsKey key;
  for (const LayerPlan& lp : plan.layers) {
    key.first.push_back(lp.bits_w);
    key.second.push_back(lp.bits_a);
  }
  return key;
}

/// First combination of ranked moves, in lexicographic rank order and with
/// as many moves as possible (at most m), whose result has not been trained
/// before. Empty when every combination leads back to a visited plan.
std::vector<Move> choose_moves(const BitPlan& plan, const std::vector<Move>& ranked,
                               std::size_t m, int delta, const std::set<BitsKey>& visited) {
  for (std::size_t size = std::min(m, ranked.size()); size > 0; --size) {
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      std::vector<Move> moves;
      for (std::size_t i : idx) moves.push_back(ranked[i]);
      if (!visited.contains(bits_key(apply_moves(plan, moves, delta)))) return moves;
      // Next combination.
      std::size_t i = size;
      while (i > 0 && idx[i - 1] == ranked.size() - size + (i - 1)) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return {};
}

PlanOutcome finish(State s, PlanTrace trace, Phase phase, PlanStatus status,
                   Zone zone, std::string action) {
  State terminal = s;
  terminal.round = trace.next_round();
  TraceRecord r = make_record(terminal, phase, std::nullopt, zone, std::move(action), s.model);
  r.status = status;
  trace.records.push_back(std::move(r));
  return PlanOutcome{std::move(s.model), std::move(s.plan), std::move(trace),
                     status, s.accuracy, s.metric};
}

}  // namespace

std::string_view to_string(TargetMetric metric) { return enum_name(metric, kMetricNames); }
TargetMetric parse_target_metric(std::string_view text) {
  return parse_enum(text, kMetricNames, "target metric");
}
std::string_view to_string(Zone zone) { return enum_name(zone, kZoneNames); }
Zone parse_zone(std::string_view text) { return parse_enum(text, kZoneNames, "zone"); }
std::string_view to_string(PlanStatus status) { return enum_name(status, kStatusNames); }
PlanStatus parse_plan_status(std::string_view text) {
  return parse_enum(text, kStatusNames, "plan status");
}
std::string_view to_string(Phase phase) { return enum_name(phase, kPhaseNames); }
Phase parse_phase(std::string_view text) { return parse_enum(text, kPhaseNames, "phase"); }

int exit_code(PlanStatus status) {
  switch (status) {
    case PlanStatus::TargetMet: return 0;
    case PlanStatus::Infeasible: return 2;
    case PlanStatus::Reverted: return 3;
  }
  return 1;
}

void Targets::validate() const {
  if (!(accuracy > 0.0 && accuracy <= 100.0)) {
    throw Error("target accuracy must lie in (0, 100]");
  }
  if (!(metric_target > 0.0) || !std::isfinite(metric_target)) {
    throw Error("target metric must be positive");
  }
  if (!(delta_a >= 0.0) || !(delta_m >= 0.0)) throw Error("buffers must be >= 0");
}

Zone classify_zone(double a, double m, const Targets& t, bool budget_exhausted) {
  t.validate();
  const double at = t.accuracy, mt = t.metric_target;
  const double da = t.delta_a, dm = t.delta_m;
  if (a >= at && m <= mt) return Zone::Target;
  if (a < at - da && m <= mt - dm) return Zone::BitIncrease;
  if (a >= at + da && m > mt + dm) return Zone::BitDecrease;
  if (a >= at - da || m <= mt + dm) return Zone::Iteration;
  if (budget_exhausted) return Zone::Abandon;
  if (a >= at - 2 * da || m <= mt + 2 * dm) return Zone::Transition;
  return Zone::BitDecrease;
}

bool phase1_continue(double a, double m, const Targets& t, std::size_t round,
                     std::size_t max_rounds) {
  return a < t.accuracy - t.delta_a && m > t.metric_target + t.delta_m &&
         round < max_rounds;
}

bool phase2_stop(double a, double m, const Targets& t) {
  return a >= t.accuracy && m <= t.metric_target;
}

bool inside_buffer(double a, double m, const Targets& t) {
  return a >= t.accuracy - t.delta_a || m <= t.metric_target + t.delta_m;
}

void SearchBudget::validate() const {
  if (phase2_rounds > 0 && layers_per_round == 0) {
    throw Error("layers_per_round must be >= 1 when phase 2 has rounds");
  }
  if (patience == 0) throw Error("patience must be >= 1");
}

double estimate_search_cost(const SearchBudget& b, double epoch_seconds) {
  if (!(epoch_seconds >= 0.0)) throw Error("epoch time must be >= 0");
  const double epochs = static_cast<double>(b.phase1_rounds * b.phase1_epochs +
                                            b.phase2_rounds * b.phase2_epochs);
  return epochs * epoch_seconds;
}

void PlannerSetup::validate() const {
  if (!train || !eval) throw Error("planner needs a training and an evaluation set");
  if (train->size() == 0 || eval->size() == 0) throw Error("planner datasets are empty");
  if (calibration_samples == 0) throw Error("calibration_samples must be positive");
  if (clusters == 0) throw Error("cluster count must be positive");
  if (bitset.empty()) throw Error("bit set is empty");
  for (int b : bitset) require_allowed_bits(b);
  if (!std::is_sorted(bitset.begin(), bitset.end())) throw Error("bit set must be ascending");
  if (!(lambda_step > 0.0)) throw Error("lambda step must be positive");
  qat.validate();
}

double plan_metric(const ModelGraph& model, const BitPlan& plan, TargetMetric metric) {
  return static_cast<double>(metric == TargetMetric::Size ? model_size_bytes(model, plan)
                                                          : bops(model, plan));
}

std::vector<double> sigma_features(const ModelGraph& model) {
  std::vector<double> out;
  for (std::size_t idx : model.quantizable_indices()) {
    out.push_back(layer_sigma(*model.layers[idx].weights));
  }
  return out;
}

BitPlan cluster_plan(const ModelGraph& model, std::size_t clusters, double lambda,
                     const std::vector<int>& bitset) {
  const std::vector<double> features = sigma_features(model);
  const std::size_t k = std::min({clusters, features.size(), bitset.size()});
  const ClusterAssignment assignment = adaptive_kmeans(features, k, lambda);
  // The top k bitwidths of the set serve the k clusters.
  const std::vector<int> top(bitset.end() - static_cast<std::ptrdiff_t>(k), bitset.end());
  return assign_bitwidths(assignment, BitPlan::uniform(model, 8, 8), top);
}

PlanOutcome phase1(const ModelGraph& model, const PlannerSetup& setup,
                   const Targets& t, const SearchBudget& budget, std::uint64_t seed) {
  setup.validate();
  t.validate();
  budget.validate();
  model.validate();

  PlanTrace trace;
  State cur;
  cur.model = model;
  cur.plan = calibrate(model, calibration_set(setup), BitPlan::uniform(model, 8, 8));
  cur.accuracy = evaluate_accuracy(model, *setup.eval, &cur.plan).top1_accuracy;
  cur.metric = plan_metric(model, cur.plan, t.metric);
  cur.round = 0;
  trace.records.push_back(make_record(cur, Phase::P1, std::nullopt,
                                      classify_zone(cur.accuracy, cur.metric, t),
                                      "init", model));

  std::size_t i = 0;
  while (phase1_continue(cur.accuracy, cur.metric, t, i, budget.phase1_rounds)) {
    // Fixed-point multiples keep the traced values exact (0.1, 0.2, ...).
    const double lambda =
        std::round(static_cast<double>(i + 1) * setup.lambda_step * 1e9) / 1e9;
    const BitPlan bits = cluster_plan(model, setup.clusters, lambda, setup.bitset);
    cur = train_round(model, bits, setup, t, budget.phase1_epochs, seed,
                      trace.next_round(), nullptr);
    trace.records.push_back(make_record(cur, Phase::P1, lambda,
                                        classify_zone(cur.accuracy, cur.metric, t),
                                        "cluster", cur.model));
    ++i;
    if (inside_buffer(cur.accuracy, cur.metric, t)) break;
  }

  if (!inside_buffer(cur.accuracy, cur.metric, t)) {
    return finish(std::move(cur), std::move(trace), Phase::P1, PlanStatus::Infeasible,
                  classify_zone(cur.accuracy, cur.metric, t, true), "stop");
  }
  const PlanStatus provisional = phase2_stop(cur.accuracy, cur.metric, t)
                                     ? PlanStatus::TargetMet
                                     : PlanStatus::Reverted;
  return PlanOutcome{std::move(cur.model), std::move(cur.plan), std::move(trace),
                     provisional, cur.accuracy, cur.metric};
}

PlanOutcome phase2(PlanOutcome entry, const PlannerSetup& setup, const Targets& t,
                   const SearchBudget& budget, std::uint64_t seed) {
  setup.validate();
  t.validate();
  budget.validate();

  PlanTrace trace = std::move(entry.trace);
  State cur{std::move(entry.model), std::move(entry.plan), entry.accuracy, entry.metric,
            trace.records.empty() ? 0 : trace.records.back().round};
  if (trace.records.empty()) {
    trace.records.push_back(make_record(cur, Phase::P2, std::nullopt,
                                        classify_zone(cur.accuracy, cur.metric, t),
                                        "init", cur.model));
  }
  State best = cur;
  std::set<BitsKey> visited{bits_key(cur.plan)};
  for (const TraceRecord& r : trace.records) visited.insert({r.bits_w, r.bits_a});
  std::size_t stall = 0;

  auto revert_to = [&](const State& s) {
    return finish(s, trace, Phase::P2, PlanStatus::Reverted,
                  classify_zone(s.accuracy, s.metric, t),
                  "revert:" + std::to_string(s.round));
  };

  for (std::size_t r = 0;; ++r) {
    if (phase2_stop(cur.accuracy, cur.metric, t)) {
      return finish(std::move(cur), std::move(trace), Phase::P2, PlanStatus::TargetMet,
                    Zone::Target, "stop");
    }
    if (r == budget.phase2_rounds) break;

    bool raise = cur.accuracy < t.accuracy;
    std::vector<Move> moves =
        raise ? choose_moves(cur.plan, rank_increase(cur.model, cur.plan, t),
                             budget.layers_per_round, 2, visited)
              : choose_moves(cur.plan, rank_decrease(cur.model, cur.plan, t),
                             budget.layers_per_round, -2, visited);
    if (moves.empty() && raise && cur.metric > t.metric_target) {
      // Nothing left to raise: work on the metric that is also violated.
      raise = false;
      moves = choose_moves(cur.plan, rank_decrease(cur.model, cur.plan, t),
                           budget.layers_per_round, -2, visited);
    }
    if (moves.empty()) break;
    const BitPlan bits = apply_moves(cur.plan, moves, raise ? 2 : -2);

    bool diverged = false;
    State next = train_round(cur.model, bits, setup, t, budget.phase2_epochs, seed,
                             trace.next_round(), &diverged);
    trace.records.push_back(make_record(
        next, Phase::P2, std::nullopt, classify_zone(next.accuracy, next.metric, t),
        std::string(raise ? "increase:" : "decrease:") + describe_moves(cur.plan, moves),
        next.model));

    if (diverged || !inside_buffer(next.accuracy, next.metric, t)) {
      // The previous state is the last one with a metric inside its buffer.
      return revert_to(cur);
    }

    visited.insert(bits_key(next.plan));
    const bool improved = raise ? next.accuracy > cur.accuracy : next.metric < cur.metric;
    stall = improved ? 0 : stall + 1;
    cur = std::move(next);
    if (better(cur, best, t)) best = cur;
    if (stall >= budget.patience && !phase2_stop(cur.accuracy, cur.metric, t)) {
      return revert_to(best);
    }
  }
  return revert_to(best);
}

PlanOutcome run_sigmaquant(const ModelGraph& model, const PlannerSetup& setup,
                           const Targets& t, const SearchBudget& budget,
                           std::uint64_t seed) {
  PlanOutcome p1 = phase1(model, setup, t, budget, seed);
  if (p1.status == PlanStatus::Infeasible) return p1;
  return phase2(std::move(p1), setup, t, budget, seed);
}

}  // namespace sigmaquant
