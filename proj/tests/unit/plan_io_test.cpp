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

#include <filesystem>

#include "json.hpp"
#include "sigmaquant/engine.hpp"
#include "sigmaquant/hw_model.hpp"
#include "sigmaquant/plan_io.hpp"

namespace sq = sigmaquant;

namespace {

sq::ModelGraph mlp() {
  return sq::build_model("mlp", {12},
                         {{sq::LayerKind::Dense, "fc0", 24},
                          {sq::LayerKind::Relu},
                          {sq::LayerKind::Dense, "fc1", 16},
                          {sq::LayerKind::Relu},
                          {sq::LayerKind::Dense, "fc2", 5}},
                         8);
}

sq::TraceRecord record_for(const sq::ModelGraph& m, const sq::BitPlan& bits, std::size_t round,
                           sq::Phase phase, std::string action) {
  sq::TraceRecord r;
  r.round = round;
  r.phase = phase;
  r.accuracy = 50.0 + static_cast<double>(round);
  r.size_bytes = sq::model_size_bytes(m, bits);
  r.bops = sq::bops(m, bits);
  r.zone = sq::Zone::Iteration;
  r.action = std::move(action);
  r.bits_w = bits.weight_bits();
  r.bits_a = bits.act_bits();
  return r;
}

/// init -> cluster -> decrease -> increase -> revert to the decrease round.
struct HandTrace {
  sq::PlanTrace trace;
  sq::PlanFile file;
};

HandTrace hand_trace(const sq::ModelGraph& m) {
  HandTrace h;
  auto& rec = h.trace.records;
  rec.push_back(record_for(m, sq::BitPlan::uniform(m, 8), 0, sq::Phase::P1, "init"));
  sq::BitPlan bits = sq::cluster_plan(m, 4, 0.1, {2, 4, 6, 8});
  rec.push_back(record_for(m, bits, 1, sq::Phase::P1, "cluster"));
  rec.back().lambda = 0.1;
  bits.layers[2].bits_w -= 2;
  bits.layers[0].bits_w -= 2;
  rec.push_back(record_for(m, bits, 2, sq::Phase::P2, "decrease:fc2.w;fc0.w"));
  const sq::BitPlan kept = bits;
  bits.layers[1].bits_w += 2;
  if (bits.layers[1].bits_w > 8) bits.layers[1].bits_w -= 4;
  rec.push_back(record_for(m, bits, 3, sq::Phase::P2,
                           bits.layers[1].bits_w > kept.layers[1].bits_w ? "increase:fc1.w"
                                                                          : "decrease:fc1.w"));
  rec.push_back(record_for(m, kept, 4, sq::Phase::P2, "revert:2"));
  rec.back().status = sq::PlanStatus::Reverted;
  h.file.plan = kept;
  h.file.status = sq::PlanStatus::Reverted;
  return h;
}

}  // namespace

TEST(PlanJson, RoundTripKeepsEverything) {
  const sq::ModelGraph m = mlp();
  const sq::Dataset ds = sq::gen_synthetic(1, 200, 12, 5, 3.0);
  sq::BitPlan plan = sq::BitPlan::uniform(m, 6, 4);
  plan.layers[1].bits_w = 2;
  sq::PlanFile file;
  file.plan = sq::calibrate(m, ds, plan);
  file.target = sq::Targets{sq::TargetMetric::Bops, 77.5, 12345.0, 1.0, 617.25};
  file.status = sq::PlanStatus::TargetMet;
  file.accuracy = 81.125;
  const std::string text = sq::plan_to_json(m, file);
  EXPECT_EQ(sq::plan_from_json(text, m), file);

  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("size_bytes"), sq::model_size_bytes(m, file.plan));
  EXPECT_EQ(j.at("bops"), sq::bops(m, file.plan));
  EXPECT_EQ(j.at("status"), "TargetMet");
  EXPECT_EQ(j.at("layers").size(), 3u);
  EXPECT_EQ(j.at("layers")[0].at("weight").at("scales").size(), 24u);
}

TEST(PlanJson, BitsOnlyPlanAndDegenerateChannels) {
  sq::ModelGraph m = mlp();
  std::fill_n(m.layers[0].weights->values().begin(), 12, 0.0f);  // channel 0 all zero
  sq::PlanFile bare{sq::BitPlan::uniform(m, 4), {}, {}, {}};
  EXPECT_EQ(sq::plan_from_json(sq::plan_to_json(m, bare), m), bare);

  sq::PlanFile frozen{sq::freeze_weight_qparams(m, sq::BitPlan::uniform(m, 4)), {}, {}, {}};
  const std::string text = sq::plan_to_json(m, frozen);
  EXPECT_EQ(nlohmann::json::parse(text)["layers"][0]["weight"]["degenerate_channels"],
            nlohmann::json::array({0}));
  const sq::PlanFile back = sq::plan_from_json(text, m);
  EXPECT_TRUE(back.plan.layers[0].weight_qparams->channels[0].degenerate);
  EXPECT_EQ(back, frozen);
}

TEST(PlanJson, RejectsInconsistentFiles) {
  const sq::ModelGraph m = mlp();
  const sq::PlanFile file{sq::freeze_weight_qparams(m, sq::BitPlan::uniform(m, 8)), {}, {}, {}};
  const auto good = nlohmann::json::parse(sq::plan_to_json(m, file));
  auto expect_error = [&](auto mutate, const std::string& needle) {
    nlohmann::json j = good;
    mutate(j);
    try {
      sq::plan_from_json(j.dump(), m);
      ADD_FAILURE() << "accepted: " << needle;
    } catch (const sq::Error& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_error([](auto& j) { j["schema_version"] = 2; }, "schema_version");
  expect_error([](auto& j) { j["layers"][1]["name"] = "ghost"; }, "ghost");
  expect_error([](auto& j) { j["layers"][1]["bits_w"] = 3; }, "");
  expect_error([](auto& j) { j["layers"][0]["weight"]["scales"].erase(0); }, "fc0");
  expect_error([](auto& j) { j["layers"][0]["weight"]["scales"][3] = -1.0; }, "non-positive");
  expect_error([](auto& j) { j["layers"].erase(2); }, "");
  EXPECT_THROW(sq::plan_from_json("{not json", m), sq::Error);
}

TEST(PlanJson, SaveAndLoad) {
  const sq::ModelGraph m = mlp();
  const auto path = std::filesystem::temp_directory_path() / "sigmaquant_plan_io_test.json";
  const sq::PlanFile file{sq::BitPlan::uniform(m, 2, 6), {}, sq::PlanStatus::Infeasible, 12.5};
  sq::save_plan(path, m, file);
  EXPECT_EQ(sq::load_plan(path, m), file);
  std::filesystem::remove(path);
  EXPECT_THROW(sq::load_plan(path, m), sq::Error);
}

TEST(TraceCsv, RoundTripAndHeader) {
  const sq::ModelGraph m = mlp();
  const HandTrace h = hand_trace(m);
  const std::string csv = sq::trace_to_csv(h.trace);
  EXPECT_EQ(csv.rfind("# sigmaquant-trace schema_version=1\n"
                      "round,phase,lambda,accuracy,size_bytes,bops,zone,action,bits_w,bits_a,status\n",
                      0),
            0u);
  const sq::PlanTrace back = sq::trace_from_csv(csv);
  EXPECT_EQ(back.records, h.trace.records);
  EXPECT_EQ(sq::trace_to_csv(back), csv);
}

TEST(TraceCsv, RejectsMalformedText) {
  EXPECT_THROW(sq::trace_from_csv("round,phase\n"), sq::Error);
  EXPECT_THROW(sq::trace_from_csv("# sigmaquant-trace schema_version=1\nround,phase\n"), sq::Error);
  const std::string head =
      "# sigmaquant-trace schema_version=1\n"
      "round,phase,lambda,accuracy,size_bytes,bops,zone,action,bits_w,bits_a,status\n";
  EXPECT_THROW(sq::trace_from_csv(head + "0,P1,,50,10,20,Iteration,init,8\n"), sq::Error);
  EXPECT_THROW(sq::trace_from_csv(head + "0,P3,,50,10,20,Iteration,init,8,8,\n"), sq::Error);
  EXPECT_THROW(sq::trace_from_csv(head + "x,P1,,50,10,20,Iteration,init,8,8,\n"), sq::Error);
  EXPECT_NO_THROW(sq::trace_from_csv(head + "0,P1,,50,10,20,Iteration,init,8,8,\n"));
}

TEST(VerifyTrace, AcceptsConsistentTrace) {
  const sq::ModelGraph m = mlp();
  const HandTrace h = hand_trace(m);
  const sq::TraceCheck check = sq::verify_trace(m, h.trace, h.file, 4, {2, 4, 6, 8});
  EXPECT_TRUE(check.ok) << (check.problems.empty() ? "" : check.problems.front());
}

TEST(VerifyTrace, FlagsTampering) {
  const sq::ModelGraph m = mlp();
  const HandTrace h = hand_trace(m);
  auto rejects = [&](auto mutate) {
    HandTrace t = h;
    mutate(t);
    return !sq::verify_trace(m, t.trace, t.file, 4, {2, 4, 6, 8}).ok;
  };
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[2].size_bytes += 1; }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[2].bops -= 1; }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[1].lambda.reset(); }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[2].action = "decrease:fc1.w"; }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[4].action = "revert:1"; }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[3].round = 1; }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[4].status.reset(); }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.file.status = sq::PlanStatus::TargetMet; }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.file.plan.layers[0].bits_w = 8; }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records.clear(); }));
  EXPECT_TRUE(rejects([](HandTrace& t) { t.trace.records[3].action = "teleport"; }));
}
