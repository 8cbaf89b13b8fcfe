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

#include <cmath>

#include "sigmaquant/engine.hpp"
#include "sigmaquant/random.hpp"
#include "ste_probe.hpp"

namespace sq = sigmaquant;
namespace sqt = sigmaquant::testing;

namespace {

sq::ModelGraph two_by_two() {
  sq::ModelGraph m = sq::build_model("tiny", {2},
                                     {{sq::LayerKind::Dense, "d0", 2},
                                      {sq::LayerKind::Relu},
                                      {sq::LayerKind::Dense, "d1", 2}},
                                     0);
  m.layers[0].weights = sq::Tensor({2, 2}, std::vector<float>{1.0f, -1.0f, 0.5f, 2.0f});
  m.layers[0].bias = sq::Tensor({2}, std::vector<float>{0.0f, -1.0f});
  m.layers[2].weights = sq::Tensor({2, 2}, std::vector<float>{1.0f, 1.0f, -2.0f, 0.25f});
  m.layers[2].bias = sq::Tensor({2}, std::vector<float>{0.5f, 0.0f});
  return m;
}

sq::ModelGraph small_convnet(std::uint64_t seed) {
  return sq::build_model("cnn", {2, 6, 6},
                         {{sq::LayerKind::Conv2d, "c0", 3, 3, 1, 1},
                          {sq::LayerKind::Relu},
                          {sq::LayerKind::MaxPool2d, "", 0, 2, 2},
                          {sq::LayerKind::Flatten},
                          {sq::LayerKind::Dense, "fc", 4},
                          {sq::LayerKind::Softmax}},
                         seed);
}

// No kinks, so central differences converge cleanly.
sq::ModelGraph smooth_convnet(std::uint64_t seed) {
  return sq::build_model("smooth", {2, 6, 6},
                         {{sq::LayerKind::Conv2d, "c0", 3, 3, 2, 1},
                          {sq::LayerKind::Flatten},
                          {sq::LayerKind::Dense, "fc", 4},
                          {sq::LayerKind::Softmax}},
                         seed);
}

sq::Tensor normal_tensor(std::uint64_t seed, sq::Shape dims) {
  sq::Rng rng(seed);
  sq::Tensor t(std::move(dims));
  for (float& v : t.values()) v = static_cast<float>(rng.normal());
  return t;
}

}  // namespace

TEST(SteGrad, PassesInsideBlocksOutside) {
  const sq::QuantParams qp{4, 0.1, 0, -7, 7, false};
  EXPECT_EQ(sq::ste_grad(0.33, qp, 2.5), 2.5);
  EXPECT_EQ(sq::ste_grad(0.7, qp, 2.5), 2.5);  // exactly Q * step
  EXPECT_EQ(sq::ste_grad(-0.7, qp, 2.5), 2.5);
  EXPECT_EQ(sq::ste_grad(0.71, qp, 2.5), 0.0);
  EXPECT_EQ(sq::ste_grad(-3.0, qp, 2.5), 0.0);
}

TEST(Forward, HandComputedDense) {
  const sq::ModelGraph m = two_by_two();
  const sq::Tensor x({2, 2}, std::vector<float>{1.0f, 2.0f, -1.0f, 0.0f});
  const sq::Tensor y = sq::forward(m, x);
  // Sample 0: h = relu(1-2, 0.5+4-1) = (0, 3.5); y = (0.5+3.5, 0.875).
  // Sample 1: h = relu(-1, -1.5) = 0; y = bias.
  EXPECT_EQ(y.dims(), (sq::Shape{2, 2}));
  EXPECT_FLOAT_EQ(y[0], 4.0f);
  EXPECT_FLOAT_EQ(y[1], 0.875f);
  EXPECT_FLOAT_EQ(y[2], 0.5f);
  EXPECT_FLOAT_EQ(y[3], 0.0f);
}

TEST(Forward, PlanQuantizesWeights) {
  const sq::ModelGraph m = two_by_two();
  const sq::Tensor x({1, 2}, std::vector<float>{1.0f, 2.0f});
  // At 2 bits the code range is [-1, 1]: every channel snaps to +-max.
  sq::BitPlan plan = sq::BitPlan::uniform(m, 2);
  const sq::Tensor y = sq::forward(m, x, &plan);
  // Layer 0 rows become (1, -1) and (0, 2) -> h = (0, 3); layer 1 rows (1, 1), (-2, 0).
  EXPECT_FLOAT_EQ(y[0], 3.5f);
  EXPECT_FLOAT_EQ(y[1], 0.0f);
  EXPECT_FALSE(sq::plan_active(nullptr));
  sq::BitPlan empty;
  EXPECT_FALSE(sq::plan_active(&empty));
  EXPECT_TRUE(sq::plan_active(&plan));
}

TEST(Forward, ActivationRangeClampsInputs) {
  const sq::ModelGraph m = two_by_two();
  sq::BitPlan plan = sq::BitPlan::uniform(m, 8);
  plan.layers[0].weight_qparams = sq::per_channel_qparams(*m.layers[0].weights, 8);
  plan.layers[1].weight_qparams = sq::per_channel_qparams(*m.layers[2].weights, 8);
  plan.layers[0].bits_a = 2;
  plan.layers[0].act_qparams = sq::ActQuantParams{2, 0.0, 1.0};
  const sq::Tensor x({1, 2}, std::vector<float>{5.0f, -3.0f});
  const sq::Tensor clamped({1, 2}, std::vector<float>{1.0f, 0.0f});
  EXPECT_EQ(sq::forward(m, x, &plan), sq::forward(m, clamped, &plan));
}

TEST(Forward, ConvOutputShapeAndSoftmaxRows) {
  const sq::ModelGraph m = small_convnet(4);
  const sq::Tensor y = sq::forward(m, normal_tensor(1, {3, 2, 6, 6}));
  ASSERT_EQ(y.dims(), (sq::Shape{3, 4}));
  for (std::size_t b = 0; b < 3; ++b) {
    double sum = 0;
    for (std::size_t c = 0; c < 4; ++c) sum += y[b * 4 + c];
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(Gradients, FloatFiniteDifferencesThroughConv) {
  sq::ModelGraph m = smooth_convnet(9);
  const sq::Tensor x = normal_tensor(2, {4, 2, 6, 6});
  const std::vector<std::uint32_t> y{0, 1, 2, 3};
  const sq::LossAndGradients lg = sq::loss_gradients(m, x, y);
  sq::Dataset ds{x, y, 4};
  auto loss_at = [&](const sq::ModelGraph& g) { return sq::evaluate_accuracy(g, ds).loss; };
  EXPECT_NEAR(lg.loss, loss_at(m), 1e-6);
  constexpr double h = 1e-2;
  for (std::size_t layer : {std::size_t{0}, std::size_t{2}}) {
    for (std::size_t i = 0; i < m.layers[layer].weights->numel(); i += 5) {
      sq::ModelGraph up = m, dn = m;
      (*up.layers[layer].weights)[i] += static_cast<float>(h);
      (*dn.layers[layer].weights)[i] -= static_cast<float>(h);
      const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
      EXPECT_NEAR((*lg.grads.weights[layer])[i], fd, 2e-3 + 2e-2 * std::abs(fd))
          << "layer " << layer << " index " << i;
    }
  }
  EXPECT_FALSE(lg.grads.weights[1].has_value());
}

TEST(Gradients, SteMatchesReferenceFiniteDifferences) {
  const sqt::SteProbeResult r = sqt::run_ste_probe(100, 200);
  EXPECT_GE(r.probed, 200u);
  EXPECT_LE(r.max_relative_error, 1e-4);
  EXPECT_GT(r.clipped, 0u);
  EXPECT_TRUE(r.clipped_all_zero);
}

TEST(Gradients, ActivationSteBlocksOutOfRangeInputs) {
  const sq::ModelGraph m = two_by_two();
  sq::BitPlan plan = sq::BitPlan::uniform(m, 8);
  plan.layers[0].weight_qparams = sq::per_channel_qparams(*m.layers[0].weights, 8);
  plan.layers[1].weight_qparams = sq::per_channel_qparams(*m.layers[2].weights, 8);
  // Hidden activation range [0, 1]: a unit at 3.5 gets no gradient.
  plan.layers[1].act_qparams = sq::ActQuantParams{8, 0.0, 1.0};
  const sq::Tensor x({1, 2}, std::vector<float>{1.0f, 2.0f});
  const std::vector<std::uint32_t> y{1};
  const auto lg = sq::loss_gradients(m, x, y, &plan);
  const sq::Tensor& g0 = *lg.grads.weights[0];
  EXPECT_EQ(g0[2], 0.0f);
  EXPECT_EQ(g0[3], 0.0f);
}

TEST(Evaluate, ChunkSizeDoesNotMatter) {
  const sq::Dataset ds = sq::gen_synthetic(5, 300, 8, 3, 3.0);
  const sq::ModelGraph m = sq::build_model(
      "m", {8}, {{sq::LayerKind::Dense, "", 16}, {sq::LayerKind::Relu}, {sq::LayerKind::Dense, "", 3}}, 1);
  const sq::EvalReport a = sq::evaluate_accuracy(m, ds, nullptr, 7);
  const sq::EvalReport b = sq::evaluate_accuracy(m, ds, nullptr, 1000);
  EXPECT_EQ(a.correct, b.correct);
  EXPECT_EQ(a.count, 300u);
  EXPECT_NEAR(a.loss, b.loss, 1e-9);
  EXPECT_DOUBLE_EQ(a.top1_accuracy, 100.0 * static_cast<double>(a.correct) / 300.0);
}

TEST(Train, LearnsSeparableBlobsDeterministically) {
  const sq::Dataset train = sq::gen_synthetic(1, 1500, 8, 4, 6.0);
  const sq::Dataset eval = sq::gen_synthetic(2, 500, 8, 4, 6.0);
  const sq::ModelGraph m = sq::build_model(
      "m", {8}, {{sq::LayerKind::Dense, "", 32}, {sq::LayerKind::Relu}, {sq::LayerKind::Dense, "", 4}}, 3);
  sq::TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.02;
  cfg.seed = 4;
  const sq::TrainResult a = sq::train_float(m, train, cfg);
  const sq::TrainResult b = sq::train_float(m, train, cfg);
  EXPECT_FALSE(a.diverged);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.steps, 5u * ((1500 + 31) / 32));
  EXPECT_GT(sq::evaluate_accuracy(a.model, eval).top1_accuracy, 90.0);

  cfg.optimizer = sq::Optimizer::Adam;
  cfg.learning_rate = 0.005;
  EXPECT_GT(sq::evaluate_accuracy(sq::train_float(m, train, cfg).model, eval).top1_accuracy, 90.0);

  cfg.epochs = 0;
  EXPECT_EQ(sq::train_float(m, train, cfg).model, m);
}

TEST(Train, DivergenceReturnsOriginalWeights) {
  const sq::Dataset train = sq::gen_synthetic(1, 200, 8, 4, 6.0);
  const sq::ModelGraph m = sq::build_model(
      "m", {8}, {{sq::LayerKind::Dense, "", 32}, {sq::LayerKind::Relu}, {sq::LayerKind::Dense, "", 4}}, 3);
  sq::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e12;
  const sq::TrainResult r = sq::train_float(m, train, cfg);
  EXPECT_TRUE(r.diverged);
  EXPECT_EQ(r.model, m);
}

TEST(Train, ConfigValidation) {
  sq::TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), sq::Error);
  cfg = {};
  cfg.learning_rate = -1.0;
  EXPECT_THROW(cfg.validate(), sq::Error);
  cfg = {};
  cfg.epochs = 0;
  cfg.learning_rate = 0.0;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Calibrate, FreezesRangesAndWeightSteps) {
  const sq::Dataset ds = sq::gen_synthetic(3, 400, 8, 3, 3.0);
  const sq::ModelGraph m = sq::build_model(
      "m", {8}, {{sq::LayerKind::Dense, "", 16}, {sq::LayerKind::Relu}, {sq::LayerKind::Dense, "", 3}}, 1);
  sq::BitPlan plan = sq::BitPlan::uniform(m, 4, 6);
  const sq::BitPlan cal = sq::calibrate(m, ds, plan);
  EXPECT_TRUE(cal.calibrated());
  EXPECT_FALSE(plan.calibrated());
  EXPECT_TRUE(cal.same_bits(plan));
  EXPECT_EQ(cal.layers[0].act_qparams->bits, 6);
  EXPECT_EQ(*cal.layers[0].weight_qparams, sq::per_channel_qparams(*m.layers[0].weights, 4));
  // Hidden layer input is post-relu: the lower bound cannot be negative.
  EXPECT_GE(cal.layers[1].act_qparams->lo, 0.0);
  EXPECT_LT(cal.layers[0].act_qparams->lo, 0.0);
  EXPECT_GT(cal.layers[0].act_qparams->hi, 0.0);
}

TEST(Qat, KeepsQuantizersAndNeedsCalibration) {
  const sq::Dataset ds = sq::gen_synthetic(3, 400, 8, 3, 3.0);
  const sq::ModelGraph m = sq::build_model(
      "m", {8}, {{sq::LayerKind::Dense, "", 16}, {sq::LayerKind::Relu}, {sq::LayerKind::Dense, "", 3}}, 1);
  const sq::BitPlan raw = sq::BitPlan::uniform(m, 4);
  sq::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 0.01;
  EXPECT_THROW(sq::qat_epochs(m, raw, ds, cfg), sq::Error);
  const sq::BitPlan cal = sq::calibrate(m, ds, raw);
  const sq::TrainResult r = sq::qat_epochs(m, cal, ds, cfg);
  EXPECT_FALSE(r.diverged);
  EXPECT_NE(r.model, m);
  const double before = sq::evaluate_accuracy(m, ds, &cal).loss;
  EXPECT_LT(sq::evaluate_accuracy(r.model, ds, &cal).loss, before);
}
