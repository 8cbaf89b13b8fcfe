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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "sigmaquant/model.hpp"
#include "sigmaquant/quantizer.hpp"

namespace sigmaquant {

struct BitPlan;

inline constexpr std::size_t kDefaultHistogramBins = 256;
/// Added to every bin probability before renormalization.
inline constexpr double kHistogramSmoothing = 1e-12;
/// Anchor divergences at or below this make the normalized score 0.
inline constexpr double kDegenerateDivergence = 1e-12;

struct Histogram {
  std::vector<double> edges;  // bins + 1, strictly increasing
  std::vector<double> mass;   // sums to 1
  std::size_t count = 0;

  std::size_t bins() const { return mass.size(); }
};

/// Population standard deviation (divides by n).
double layer_sigma(std::span<const float> weights);
double layer_sigma(const Tensor& weights);

/// Equal-width histogram over [lo, hi]. Samples outside the range are
/// clamped into the edge bins and a sample equal to hi lands in the last bin.
/// Bin probabilities get kHistogramSmoothing added and are renormalized.
Histogram build_histogram(std::span<const float> samples, std::size_t bins,
                          double lo, double hi);

/// sum p * ln(p / q) in nats. Throws Error when the edges differ.
double kl_divergence(const Histogram& p, const Histogram& q);

/// Which quantizer layer_kl_at_bits applies to the weights.
enum class KlScheme { PerTensorMax, PerTensorStatistical, PerChannelMax };

/// KL divergence between the weight histogram and the histogram of the
/// quantize-dequantized weights, both binned on the float tensor's
/// [min, max]. A constant tensor yields 0.
double layer_kl_at_bits(const Tensor& weights, int bits,
                        KlScheme scheme = KlScheme::PerChannelMax,
                        double statistical_k = 3.0);

/// KL at `bits` divided by KL at 2 bits, clamped to [0, 1]; 0 when the 2-bit
/// divergence is degenerate.
double normalized_kl(const Tensor& weights, int bits,
                     KlScheme scheme = KlScheme::PerChannelMax);

struct SensitivityRecord {
  std::string layer;
  std::size_t layer_index = 0;
  double sigma = 0.0;
  std::map<int, double> kl_at_bits;
  double normalized_kl = 0.0;
};

/// One record per quantizable layer (model order) with the normalized KL at
/// the layer's planned weight bitwidth. kl_at_bits holds the divergences
/// at 2 bits and at the planned bits.
std::vector<SensitivityRecord> sensitivity_scores(const ModelGraph& model,
                                                  const BitPlan& plan);

/// Full per-layer table: sigma and KL at every allowed bitwidth, normalized
/// at `bits_for_score[i]` for the i-th quantizable layer.
std::vector<SensitivityRecord> layer_stats_table(
    const ModelGraph& model, const std::vector<int>& bits_for_score);

}  // namespace sigmaquant
