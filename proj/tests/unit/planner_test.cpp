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

#include <gtest/gtest.h>

#include "sigmaquant/hw_model.hpp"
#include "sigmaquant/planner.hpp"
#include "zone_table.hpp"

namespace sq = sigmaquant;
namespace sqt = sigmaquant::testing;

TEST(Zones, TableDriven) {
  const sq::Targets t = sqt::zone_table_targets();
  for (const sqt::ZoneCase& c : sqt::kZoneTable) {
    const bool exhausted = c.round >= sqt::kZoneTableRounds;
    SCOPED_TRACE(testing::Message() << "A=" << c.accuracy << " M=" << c.metric
                                    << " round=" << c.round);
    EXPECT_EQ(sq::classify_zone(c.accuracy, c.metric, t, exhausted), c.zone);
    EXPECT_EQ(sq::phase1_continue(c.accuracy, c.metric, t, c.round, sqt::kZoneTableRounds),
              c.phase1_continue);
    EXPECT_EQ(sq::phase2_stop(c.accuracy, c.metric, t), c.phase2_stop);
  }
}

TEST(Zones, BudgetFlagOnlyAffectsBothViolatedPoints) {
  const sq::Targets t = sqt::zone_table_targets();
  EXPECT_EQ(sq::classify_zone(81, 9, t, true), sq::Zone::Target);
  EXPECT_EQ(sq::classify_zone(79.5, 12, t, true), sq::Zone::Iteration);
  EXPECT_EQ(sq::classify_zone(70, 20, t, false), sq::Zone::BitDecrease);
}

TEST(Zones, ZeroBuffersStillTotal) {
  sq::Targets t = sqt::zone_table_targets();
  t.delta_a = 0;
  t.delta_m = 0;
  EXPECT_EQ(sq::classify_zone(80, 10, t), sq::Zone::Target);
  EXPECT_EQ(sq::classify_zone(79, 9, t), sq::Zone::BitIncrease);
  EXPECT_EQ(sq::classify_zone(81, 11, t), sq::Zone::BitDecrease);
  EXPECT_EQ(sq::classify_zone(79, 11, t), sq::Zone::BitDecrease);
  EXPECT_EQ(sq::classify_zone(79, 11, t, true), sq::Zone::Abandon);
}

TEST(Targets, Validation) {
  sq::Targets t = sqt::zone_table_targets();
  EXPECT_NO_THROW(t.validate());
  t.accuracy = 0;
  EXPECT_THROW(t.validate(), sq::Error);
  t = sqt::zone_table_targets();
  t.accuracy = 100.5;
  EXPECT_THROW(t.validate(), sq::Error);
  t = sqt::zone_table_targets();
  t.metric_target = 0;
  EXPECT_THROW(t.validate(), sq::Error);
  t = sqt::zone_table_targets();
  t.delta_m = -1;
  EXPECT_THROW(t.validate(), sq::Error);
}

TEST(SearchCost, Formula) {
  sq::SearchBudget b;
  b.phase1_rounds = 3;
  b.phase1_epochs = 4;
  b.phase2_rounds = 5;
  b.phase2_epochs = 40;
  EXPECT_DOUBLE_EQ(sq::estimate_search_cost(b, 1.0), 212.0);
  EXPECT_DOUBLE_EQ(sq::estimate_search_cost(b, 0.5), 106.0);
  b.phase2_rounds = 0;
  EXPECT_DOUBLE_EQ(sq::estimate_search_cost(b, 2.0), 24.0);
  EXPECT_DOUBLE_EQ(sq::estimate_search_cost(sq::SearchBudget{0, 0, 0, 0, 1, 1}, 3.0), 0.0);
  EXPECT_THROW(sq::estimate_search_cost(b, -1.0), sq::Error);
}

TEST(SearchBudget, Validation) {
  sq::SearchBudget b;
  b.layers_per_round = 0;
  EXPECT_THROW(b.validate(), sq::Error);
  b.phase2_rounds = 0;
  EXPECT_NO_THROW(b.validate());
}

TEST(Enums, RoundTrip) {
  for (auto z : {sq::Zone::BitIncrease, sq::Zone::BitDecrease, sq::Zone::Transition,
                 sq::Zone::Abandon, sq::Zone::Iteration, sq::Zone::Target}) {
    EXPECT_EQ(sq::parse_zone(sq::to_string(z)), z);
  }
  for (auto s : {sq::PlanStatus::TargetMet, sq::PlanStatus::Infeasible, sq::PlanStatus::Reverted}) {
    EXPECT_EQ(sq::parse_plan_status(sq::to_string(s)), s);
  }
  EXPECT_EQ(sq::exit_code(sq::PlanStatus::TargetMet), 0);
  EXPECT_EQ(sq::exit_code(sq::PlanStatus::Infeasible), 2);
  EXPECT_EQ(sq::exit_code(sq::PlanStatus::Reverted), 3);
  EXPECT_EQ(sq::parse_target_metric("bops"), sq::TargetMetric::Bops);
  EXPECT_EQ(sq::parse_phase(sq::to_string(sq::Phase::P2)), sq::Phase::P2);
  EXPECT_THROW(sq::parse_zone("Nowhere"), sq::Error);
}

namespace {

struct SmallRun {
  sq::Dataset train, eval;
  sq::ModelGraph model;
  double baseline = 0;
  sq::PlannerSetup setup;
};

const SmallRun& small_run() {
  static const SmallRun run = [] {
    SmallRun r;
    r.train = sq::gen_synthetic(21, 1500, 16, 6, 4.0);
    r.eval = sq::gen_synthetic(22, 600, 16, 6, 4.0);
    const sq::ModelGraph init = sq::build_model(
        "small", {16},
        {{sq::LayerKind::Dense, "", 48}, {sq::LayerKind::Relu},
         {sq::LayerKind::Dense, "", 32}, {sq::LayerKind::Relu},
         {sq::LayerKind::Dense, "", 6}},
        5);
    sq::TrainConfig cfg;
    cfg.epochs = 8;
    cfg.learning_rate = 0.02;
    cfg.seed = 5;
    r.model = sq::train_float(init, r.train, cfg).model;
    r.baseline = sq::evaluate_accuracy(r.model, r.eval).top1_accuracy;
    return r;
  }();
  return run;
}

sq::PlannerSetup setup_for(const SmallRun& r) {
  sq::PlannerSetup s;
  s.train = &r.train;
  s.eval = &r.eval;
  s.calibration_samples = 512;
  s.qat.learning_rate = 0.01;
  return s;
}

sq::SearchBudget short_budget() {
  sq::SearchBudget b;
  b.phase1_epochs = 1;
  b.phase2_epochs = 1;
  b.phase2_rounds = 6;
  return b;
}

}  // namespace

TEST(ClusterPlan, TopBitsFollowSigma) {
  const SmallRun& r = small_run();
  const std::vector<double> sig = sq::sigma_features(r.model);
  ASSERT_EQ(sig.size(), 3u);
  const sq::BitPlan p = sq::cluster_plan(r.model, 4, 0.1, {2, 4, 6, 8});
  // K is capped at three layers, so bits come from {4, 6, 8}.
  const std::vector<int> bits = p.weight_bits();
  for (int b : bits) EXPECT_GE(b, 4);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (sig[i] < sig[j]) {
        EXPECT_LE(bits[i], bits[j]);
      }
    }
  }
  EXPECT_EQ(p.act_bits(), (std::vector<int>{8, 8, 8}));
}

TEST(Phase1, LenientTargetsNeedNoClustering) {
  const SmallRun& r = small_run();
  sq::Targets t;
  t.accuracy = 10.0;
  t.metric_target = 1e9;
  const sq::PlanOutcome out = sq::phase1(r.model, setup_for(r), t, short_budget(), 1);
  ASSERT_EQ(out.trace.records.size(), 1u);
  EXPECT_EQ(out.trace.records[0].action, "init");
  EXPECT_EQ(out.plan.weight_bits(), (std::vector<int>{8, 8, 8}));
  EXPECT_EQ(out.status, sq::PlanStatus::TargetMet);
}

TEST(Phase1, ImpossibleTargetIsInfeasible) {
  const SmallRun& r = small_run();
  sq::Targets t;
  t.accuracy = std::min(100.0, r.baseline + 5.0);
  t.metric_target =
      0.01 * static_cast<double>(sq::model_size_bytes(r.model, sq::BitPlan::uniform(r.model, 8)));
  t.delta_a = 0.5;
  const sq::PlanOutcome out = sq::phase1(r.model, setup_for(r), t, short_budget(), 1);
  EXPECT_EQ(out.status, sq::PlanStatus::Infeasible);
  const auto& rec = out.trace.records;
  ASSERT_EQ(rec.size(), 5u);  // init, three clustering rounds, stop
  EXPECT_DOUBLE_EQ(*rec[1].lambda, 0.1);
  EXPECT_DOUBLE_EQ(*rec[2].lambda, 0.2);
  EXPECT_DOUBLE_EQ(*rec[3].lambda, 0.3);
  EXPECT_EQ(rec.back().action, "stop");
  EXPECT_EQ(rec.back().zone, sq::Zone::Abandon);
  EXPECT_EQ(rec.back().status, sq::PlanStatus::Infeasible);
  for (std::size_t i = 1; i < rec.size(); ++i) EXPECT_GT(rec[i].round, rec[i - 1].round);
  EXPECT_EQ(sq::exit_code(out.status), 2);
}

TEST(Phase2, EntryAlreadyOnTargetStopsImmediately) {
  const SmallRun& r = small_run();
  sq::Targets t;
  t.accuracy = 10.0;
  t.metric_target = 1e9;
  const sq::PlanOutcome out = sq::run_sigmaquant(r.model, setup_for(r), t, short_budget(), 1);
  EXPECT_EQ(out.status, sq::PlanStatus::TargetMet);
  ASSERT_EQ(out.trace.records.size(), 2u);
  EXPECT_EQ(out.trace.records.back().action, "stop");
  EXPECT_EQ(out.trace.records.back().status, sq::PlanStatus::TargetMet);
}

TEST(Phase2, SizeTargetIsMetAndMovesAreMonotone) {
  const SmallRun& r = small_run();
  sq::Targets t;
  t.accuracy = r.baseline - 3.0;
  t.metric_target =
      0.5 * static_cast<double>(sq::model_size_bytes(r.model, sq::BitPlan::uniform(r.model, 8)));
  t.delta_m = 0.05 * t.metric_target;
  sq::SearchBudget b = short_budget();
  b.phase2_epochs = 2;
  b.phase2_rounds = 10;
  const sq::PlanOutcome out = sq::run_sigmaquant(r.model, setup_for(r), t, b, 3);
  const auto& rec = out.trace.records;
  for (std::size_t i = 1; i < rec.size(); ++i) {
    if (rec[i].action.rfind("decrease:", 0) == 0) {
      EXPECT_LT(rec[i].size_bytes, rec[i - 1].size_bytes);
    } else if (rec[i].action.rfind("increase:", 0) == 0) {
      EXPECT_GT(rec[i].size_bytes, rec[i - 1].size_bytes);
    }
    for (int bw : rec[i].bits_w) EXPECT_TRUE(sq::is_allowed_bits(bw));
  }
  ASSERT_EQ(out.status, sq::PlanStatus::TargetMet) << out.plan.describe();
  EXPECT_GE(sq::evaluate_accuracy(out.model, r.eval, &out.plan).top1_accuracy, t.accuracy);
  EXPECT_LE(static_cast<double>(sq::model_size_bytes(out.model, out.plan)), t.metric_target);
  EXPECT_EQ(rec.back().status, sq::PlanStatus::TargetMet);
}

TEST(Phase2, BopsTargetCanLowerActivations) {
  const SmallRun& r = small_run();
  const double int8_bops =
      static_cast<double>(sq::bops(r.model, sq::BitPlan::uniform(r.model, 8, 8)));
  sq::Targets t;
  t.metric = sq::TargetMetric::Bops;
  t.accuracy = r.baseline - 5.0;
  t.metric_target = 0.4 * int8_bops;
  t.delta_m = 0.05 * t.metric_target;
  sq::SearchBudget b = short_budget();
  b.phase2_epochs = 2;
  b.phase2_rounds = 12;
  const sq::PlanOutcome out = sq::run_sigmaquant(r.model, setup_for(r), t, b, 2);
  ASSERT_EQ(out.status, sq::PlanStatus::TargetMet) << out.plan.describe();
  EXPECT_LE(static_cast<double>(sq::bops(out.model, out.plan)), t.metric_target);
}

TEST(Planner, Deterministic) {
  const SmallRun& r = small_run();
  sq::Targets t;
  t.accuracy = r.baseline - 2.0;
  t.metric_target =
      0.6 * static_cast<double>(sq::model_size_bytes(r.model, sq::BitPlan::uniform(r.model, 8)));
  const sq::SearchBudget b = short_budget();
  const sq::PlanOutcome a = sq::run_sigmaquant(r.model, setup_for(r), t, b, 9);
  const sq::PlanOutcome c = sq::run_sigmaquant(r.model, setup_for(r), t, b, 9);
  EXPECT_EQ(a.trace.records, c.trace.records);
  EXPECT_EQ(a.plan, c.plan);
  EXPECT_EQ(a.model, c.model);
}
