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
#include <span>
#include <vector>

#include "sigmaquant/bit_plan.hpp"
#include "sigmaquant/dataset.hpp"
#include "sigmaquant/model.hpp"

namespace sigmaquant {

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Sgd;

  /// Throws Error unless batch size and learning rate are usable. Zero
  /// epochs and a zero learning rate are allowed and leave weights intact.
  void validate() const;
};

struct EvalReport {
  double top1_accuracy = 0.0;  // percent
  double loss = 0.0;           // mean cross-entropy
  std::size_t count = 0;
  std::size_t correct = 0;
};

struct TrainResult {
  ModelGraph model;
  bool diverged = false;
  double final_loss = 0.0;  // mean loss of the last epoch
  std::size_t steps = 0;
};

/// Weight and bias gradients, indexed like ModelGraph::layers; entries of
/// layers without parameters are empty.
struct Gradients {
  std::vector<std::optional<Tensor>> weights;
  std::vector<std::optional<Tensor>> bias;
};

struct LossAndGradients {
  double loss = 0.0;  // mean over the batch
  Gradients grads;
};

/// True when a plan should be applied: non-null with at least one layer.
bool plan_active(const BitPlan* plan);

/// Runs the chain on a batch of dims [B, ...input_shape]. With an active
/// plan, each quantizable layer uses per-channel fake-quantized weights
/// (frozen parameters when present, otherwise derived from the current
/// weights at bits_w) and fake-quantizes its input when the plan carries an
/// activation range.
Tensor forward(const ModelGraph& model, const Tensor& batch,
               const BitPlan* plan = nullptr);

/// Mean softmax cross-entropy and its gradient with respect to the latent
/// (unquantized) parameters. Weight fake-quantization passes gradients
/// straight through inside the clip range and blocks them outside; the
/// activation quantizer does the same over [lo, hi]. A trailing softmax layer
/// is folded into the loss.
LossAndGradients loss_gradients(const ModelGraph& model, const Tensor& inputs,
                                std::span<const std::uint32_t> labels,
                                const BitPlan* plan = nullptr);

/// Straight-through gradient of one fake-quantized weight.
double ste_grad(double w, const QuantParams& qp, double upstream);

/// Top-1 accuracy and mean loss over every sample. Independent of the
/// evaluation chunk size.
EvalReport evaluate_accuracy(const ModelGraph& model, const Dataset& dataset,
                             const BitPlan* plan = nullptr,
                             std::size_t chunk = 256);

/// Float forward passes over `calib_set` feed one 99.9th-percentile observer
/// per quantizable layer input; returns `plan` with activation ranges at
/// bits_a and per-channel weight parameters at bits_w frozen.
BitPlan calibrate(const ModelGraph& model, const Dataset& calib_set,
                  const BitPlan& plan, double percentile = 0.999);

/// Float training with the configured optimizer.
TrainResult train_float(const ModelGraph& model, const Dataset& dataset,
                        const TrainConfig& cfg);

/// Quantization-aware training through the frozen quantizers of a
/// calibrated plan. Bitwidths and quantizer parameters are not modified.
TrainResult qat_epochs(const ModelGraph& model, const BitPlan& plan,
                       const Dataset& dataset, const TrainConfig& cfg);

}  // namespace sigmaquant
