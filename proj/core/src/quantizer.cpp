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

#include "sigmaquant/quantizer.hpp"

#include <algorithm>
#include <cmath>

namespace sigmaquant {

namespace {

// Absorbs floating error in p * n so that e.g. 0.999 * 1000 lands on rank 999.
constexpr double kRankEpsilon = 1e-9;

std::size_t nearest_rank(double p, std::size_t n) {
  double r = std::ceil(p * static_cast<double>(n) - kRankEpsilon);
  r = std::clamp(r, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(r);
}

double population_sigma(std::span<const float> values) {
  double mean = 0.0;
  for (float v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (float v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace

bool is_allowed_bits(int bits) {
  return std::find(std::begin(kAllowedBits), std::end(kAllowedBits), bits) !=
         std::end(kAllowedBits);
}

void require_allowed_bits(int bits) {
  if (!is_allowed_bits(bits)) {
    throw Error("bitwidth " + std::to_string(bits) + " not in {2,4,6,8}");
  }
}

int symmetric_qmax(int bits) { return (1 << (bits - 1)) - 1; }

QuantParams weight_qparams(std::span<const float> weights, int bits,
                           WeightScaling scaling) {
  require_allowed_bits(bits);
  if (weights.empty()) throw Error("cannot quantize an empty tensor");
  QuantParams qp;
  qp.bits = bits;
  qp.qmax = symmetric_qmax(bits);
  qp.qmin = -qp.qmax;
  qp.zero_point = 0;

  double range = 0.0;
  if (scaling.mode == ScaleMode::Max) {
    for (float v : weights) range = std::max(range, std::abs(double{v}));
  } else {
    range = scaling.k * population_sigma(weights);
  }
  if (range > 0.0) {
    qp.scale = range / qp.qmax;
  } else {
    qp.scale = kDegenerateScale;
    qp.degenerate = true;
  }
  return qp;
}

QuantParams weight_qparams(const Tensor& weights, int bits,
                           WeightScaling scaling) {
  return weight_qparams(weights.data(), bits, scaling);
}

long quantize_code(double w, const QuantParams& qp) {
  const double q = std::round(w / qp.scale) + qp.zero_point;
  return static_cast<long>(
      std::clamp(q, static_cast<double>(qp.qmin), static_cast<double>(qp.qmax)));
}

double fake_quant_value(double w, const QuantParams& qp) {
  return static_cast<double>(quantize_code(w, qp) - qp.zero_point) * qp.scale;
}

Tensor quantize_dequantize(const Tensor& weights, const QuantParams& qp) {
  Tensor out(weights.dims());
  const auto& in = weights.values();
  auto& dst = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    dst[i] = static_cast<float>(fake_quant_value(in[i], qp));
  }
  return out;
}

ChannelQuantParams per_channel_qparams(const Tensor& weight, int bits) {
  if (weight.rank() == 0 || weight.dim(0) == 0) {
    throw Error("per-channel quantization needs an output-channel dimension");
  }
  const std::size_t channels = weight.dim(0);
  const std::size_t block = weight.numel() / channels;
  ChannelQuantParams cqp;
  cqp.channels.reserve(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    cqp.channels.push_back(
        weight_qparams(weight.data().subspan(c * block, block), bits));
  }
  return cqp;
}

Tensor quantize_dequantize(const Tensor& weight, const ChannelQuantParams& cqp) {
  if (cqp.channels.size() != weight.dim(0)) {
    throw Error("channel parameter count does not match weight dims " +
                shape_to_string(weight.dims()));
  }
  const std::size_t block = weight.numel() / cqp.channels.size();
  Tensor out(weight.dims());
  const auto& in = weight.values();
  auto& dst = out.values();
  for (std::size_t c = 0; c < cqp.channels.size(); ++c) {
    const QuantParams& qp = cqp.channels[c];
    for (std::size_t i = c * block; i < (c + 1) * block; ++i) {
      dst[i] = static_cast<float>(fake_quant_value(in[i], qp));
    }
  }
  return out;
}

std::vector<long> quantize_codes(const Tensor& weight,
                                 const ChannelQuantParams& cqp) {
  if (cqp.channels.size() != weight.dim(0)) {
    throw Error("channel parameter count does not match weight dims " +
                shape_to_string(weight.dims()));
  }
  const std::size_t block = weight.numel() / cqp.channels.size();
  std::vector<long> codes(weight.numel());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    codes[i] = quantize_code(weight[i], cqp.channels[i / block]);
  }
  return codes;
}

ActObserver::ActObserver(double percentile) : percentile_(percentile) {
  if (!(percentile > 0.5 && percentile <= 1.0)) {
    throw Error("observer percentile must lie in (0.5, 1]");
  }
}

void ActObserver::update(std::span<const float> batch) {
  if (batch.empty()) throw Error("observer update with an empty batch");
  samples_.insert(samples_.end(), batch.begin(), batch.end());
  recompute();
}

void ActObserver::merge(const ActObserver& other) {
  if (other.empty()) return;
  samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
  recompute();
}

void ActObserver::recompute() {
  std::vector<float> work = samples_;
  const std::size_t n = work.size();
  const std::size_t hi_rank = nearest_rank(percentile_, n);
  const std::size_t lo_rank = nearest_rank(1.0 - percentile_, n);
  std::nth_element(work.begin(), work.begin() + (hi_rank - 1), work.end());
  hi_ = work[hi_rank - 1];
  std::nth_element(work.begin(), work.begin() + (lo_rank - 1), work.end());
  lo_ = work[lo_rank - 1];
}

ActObserver act_observer_update(ActObserver obs, const Tensor& batch) {
  obs.update(batch.data());
  return obs;
}

double ActQuantParams::scale() const {
  if (degenerate()) return 0.0;
  return (hi - lo) / static_cast<double>((1 << bits) - 1);
}

int ActQuantParams::zero_point() const {
  if (degenerate()) return 0;
  const double levels = static_cast<double>((1 << bits) - 1);
  return static_cast<int>(std::clamp(std::round(-lo / scale()), 0.0, levels));
}

ActQuantParams act_qparams(const ActObserver& obs, int bits) {
  require_allowed_bits(bits);
  if (obs.empty()) throw Error("activation observer has no data");
  return ActQuantParams{bits, obs.lo(), obs.hi()};
}

double act_fake_quant_value(double x, const ActQuantParams& ap) {
  if (ap.degenerate()) return ap.lo;
  const double levels = static_cast<double>((1 << ap.bits) - 1);
  const double t = std::clamp(x, ap.lo, ap.hi);
  const double k = std::round((t - ap.lo) / (ap.hi - ap.lo) * levels);
  return ap.lo + (ap.hi - ap.lo) * (k / levels);
}

Tensor act_quantize(const Tensor& x, const ActQuantParams& ap) {
  Tensor out(x.dims());
  const auto& in = x.values();
  auto& dst = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    dst[i] = static_cast<float>(act_fake_quant_value(in[i], ap));
  }
  return out;
}

Tensor act_quantize(const Tensor& x, const ActObserver& obs, int bits) {
  return act_quantize(x, act_qparams(obs, bits));
}

}  // namespace sigmaquant
