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

#include "sigmaquant/layer_stats.hpp"

#include <algorithm>
#include <cmath>

#include "sigmaquant/bit_plan.hpp"

namespace sigmaquant {

namespace {

double normalize_against_anchor(double at_bits, double anchor, int bits) {
  if (anchor <= kDegenerateDivergence) return 0.0;
  if (bits == 2) return 1.0;
  return std::clamp(at_bits / anchor, 0.0, 1.0);
}

}  // namespace

double layer_sigma(std::span<const float> weights) {
  if (weights.empty()) throw Error("sigma of an empty tensor");
  double mean = 0.0;
  for (float v : weights) mean += v;
  mean /= static_cast<double>(weights.size());
  double ss = 0.0;
  for (float v : weights) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(weights.size()));
}

double layer_sigma(const Tensor& weights) { return layer_sigma(weights.data()); }

Histogram build_histogram(std::span<const float> samples, std::size_t bins,
                          double lo, double hi) {
  if (!(lo < hi)) throw Error("histogram range needs lo < hi");
  if (bins < 2) throw Error("histogram needs at least 2 bins");
  Histogram h;
  h.count = samples.size();
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = lo + width * static_cast<double>(i);
  }
  h.edges[bins] = hi;

  std::vector<std::size_t> counts(bins, 0);
  const double inv = static_cast<double>(bins) / (hi - lo);
  for (float v : samples) {
    double pos = std::floor((double{v} - lo) * inv);
    pos = std::clamp(pos, 0.0, static_cast<double>(bins - 1));
    ++counts[static_cast<std::size_t>(pos)];
  }
  const double n = samples.empty() ? 1.0 : static_cast<double>(samples.size());
  const double total = 1.0 + kHistogramSmoothing * static_cast<double>(bins);
  h.mass.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    h.mass[i] = (static_cast<double>(counts[i]) / n + kHistogramSmoothing) / total;
  }
  return h;
}

double kl_divergence(const Histogram& p, const Histogram& q) {
  if (p.edges != q.edges) throw Error("KL divergence needs identical bin edges");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.mass.size(); ++i) {
    if (p.mass[i] > 0.0) kl += p.mass[i] * std::log(p.mass[i] / q.mass[i]);
  }
  return std::max(kl, 0.0);
}

double layer_kl_at_bits(const Tensor& weights, int bits, KlScheme scheme,
                        double statistical_k) {
  require_allowed_bits(bits);
  if (weights.empty()) throw Error("KL of an empty tensor");
  const auto [mn, mx] = std::minmax_element(weights.values().begin(),
                                            weights.values().end());
  if (!(*mn < *mx)) return 0.0;

  Tensor quantized;
  switch (scheme) {
    case KlScheme::PerTensorMax:
      quantized = quantize_dequantize(weights, weight_qparams(weights, bits));
      break;
    case KlScheme::PerTensorStatistical:
      quantized = quantize_dequantize(
          weights, weight_qparams(weights, bits,
                                  {ScaleMode::Statistical, statistical_k}));
      break;
    case KlScheme::PerChannelMax:
      quantized = quantize_dequantize(weights, per_channel_qparams(weights, bits));
      break;
  }
  const Histogram p =
      build_histogram(weights.data(), kDefaultHistogramBins, *mn, *mx);
  const Histogram q =
      build_histogram(quantized.data(), kDefaultHistogramBins, *mn, *mx);
  return kl_divergence(p, q);
}

double normalized_kl(const Tensor& weights, int bits, KlScheme scheme) {
  require_allowed_bits(bits);
  const double anchor = layer_kl_at_bits(weights, 2, scheme);
  const double at_bits =
      bits == 2 ? anchor : layer_kl_at_bits(weights, bits, scheme);
  return normalize_against_anchor(at_bits, anchor, bits);
}

std::vector<SensitivityRecord> sensitivity_scores(const ModelGraph& model,
                                                  const BitPlan& plan) {
  const std::vector<std::size_t> qidx = model.quantizable_indices();
  if (plan.layers.size() != qidx.size()) {
    throw Error("plan covers " + std::to_string(plan.layers.size()) +
                " layers, model has " + std::to_string(qidx.size()) +
                " quantizable layers");
  }
  std::vector<SensitivityRecord> out;
  out.reserve(qidx.size());
  for (std::size_t i = 0; i < qidx.size(); ++i) {
    const LayerRecord& layer = model.layers[qidx[i]];
    const int bits = plan.layers[i].bits_w;
    SensitivityRecord rec;
    rec.layer = layer.name;
    rec.layer_index = qidx[i];
    rec.sigma = layer_sigma(*layer.weights);
    const double anchor = layer_kl_at_bits(*layer.weights, 2);
    const double at_bits =
        bits == 2 ? anchor : layer_kl_at_bits(*layer.weights, bits);
    rec.kl_at_bits[2] = anchor;
    rec.kl_at_bits[bits] = at_bits;
    rec.normalized_kl = normalize_against_anchor(at_bits, anchor, bits);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SensitivityRecord> layer_stats_table(
    const ModelGraph& model, const std::vector<int>& bits_for_score) {
  const std::vector<std::size_t> qidx = model.quantizable_indices();
  if (bits_for_score.size() != qidx.size()) {
    throw Error("need one scoring bitwidth per quantizable layer");
  }
  std::vector<SensitivityRecord> out;
  for (std::size_t i = 0; i < qidx.size(); ++i) {
    const LayerRecord& layer = model.layers[qidx[i]];
    SensitivityRecord rec;
    rec.layer = layer.name;
    rec.layer_index = qidx[i];
    rec.sigma = layer_sigma(*layer.weights);
    for (int b : kAllowedBits) {
      rec.kl_at_bits[b] = layer_kl_at_bits(*layer.weights, b);
    }
    const double anchor = rec.kl_at_bits[2];
    const int bits = bits_for_score[i];
    require_allowed_bits(bits);
    rec.normalized_kl =
        normalize_against_anchor(rec.kl_at_bits[bits], anchor, bits);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace sigmaquant
