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

#include <span>
#include <vector>

#include "sigmaquant/tensor.hpp"

namespace sigmaquant {

/// Bitwidths the planner may assign.
inline constexpr int kAllowedBits[] = {2, 4, 6, 8};

bool is_allowed_bits(int bits);
/// Throws Error unless bits is in {2,4,6,8}.
void require_allowed_bits(int bits);

/// Largest symmetric code, 2^(bits-1) - 1.
int symmetric_qmax(int bits);

/// Step used when a tensor (or channel) is all zeros: the smallest normal
/// float. Every value then quantizes to 0.
inline constexpr double kDegenerateScale = 1.17549435082228750797e-38;

/// Uniform quantizer parameters for one tensor or one output channel.
struct QuantParams {
  int bits = 8;
  double scale = 1.0;  // step size
  int zero_point = 0;
  int qmin = -127;
  int qmax = 127;
  bool degenerate = false;

  friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

/// Per-output-channel parameters sharing one bitwidth.
struct ChannelQuantParams {
  std::vector<QuantParams> channels;

  int bits() const { return channels.empty() ? 0 : channels.front().bits; }
  friend bool operator==(const ChannelQuantParams&,
                         const ChannelQuantParams&) = default;
};

enum class ScaleMode { Max, Statistical };

/// How a symmetric weight step is derived from the data.
///
/// Max: step = max|w| / Q. Statistical: the clip range is k * sigma and the
/// step is that range divided by Q (sigma is the population std-dev).
struct WeightScaling {
  ScaleMode mode = ScaleMode::Max;
  double k = 3.0;
};

/// Symmetric parameters for the flat value set `weights`.
QuantParams weight_qparams(std::span<const float> weights, int bits,
                           WeightScaling scaling = {});
QuantParams weight_qparams(const Tensor& weights, int bits,
                           WeightScaling scaling = {});

/// Integer code clip(round(w / step), qmin, qmax); rounding is half away
/// from zero.
long quantize_code(double w, const QuantParams& qp);

/// (code - zero_point) * step for a single value.
double fake_quant_value(double w, const QuantParams& qp);

/// Quantize-dequantize every value of `weights` with one parameter set.
Tensor quantize_dequantize(const Tensor& weights, const QuantParams& qp);

/// Max-mode symmetric parameters for each output channel. The tensor's
/// leading dimension is the output channel; each channel is a contiguous
/// block of numel / dims[0] values.
ChannelQuantParams per_channel_qparams(const Tensor& weight, int bits);

Tensor quantize_dequantize(const Tensor& weight, const ChannelQuantParams& cqp);

/// Integer codes of a per-channel quantized tensor (same layout as weight).
std::vector<long> quantize_codes(const Tensor& weight,
                                 const ChannelQuantParams& cqp);

/// Percentile clipping observer for activations.
///
/// Keeps every observed value, so bounds are exact nearest-rank percentiles
/// of the pooled sample: hi is the value at rank ceil(p * n) and lo the value
/// at rank ceil((1 - p) * n) of the sorted sample (1-based, clamped to
/// [1, n]). Observers merge by pooling their samples.
class ActObserver {
 public:
  explicit ActObserver(double percentile = 0.999);

  void update(std::span<const float> batch);
  void merge(const ActObserver& other);

  double percentile() const { return percentile_; }
  std::size_t count() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  void recompute();

  double percentile_;
  std::vector<float> samples_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

ActObserver act_observer_update(ActObserver obs, const Tensor& batch);

/// Frozen asymmetric activation quantizer over [lo, hi] with 2^bits levels.
struct ActQuantParams {
  int bits = 8;
  double lo = 0.0;
  double hi = 0.0;

  bool degenerate() const { return !(hi > lo); }
  double scale() const;
  /// Integer level nearest to 0.0, for integer-kernel consumers.
  int zero_point() const;

  friend bool operator==(const ActQuantParams&, const ActQuantParams&) = default;
};

ActQuantParams act_qparams(const ActObserver& obs, int bits);

/// Clamps to [lo, hi] and snaps to lo + k * (hi - lo) / (2^bits - 1). Both
/// endpoints are reproduced exactly. A degenerate range maps everything to lo.
double act_fake_quant_value(double x, const ActQuantParams& ap);
Tensor act_quantize(const Tensor& x, const ActObserver& obs, int bits);
Tensor act_quantize(const Tensor& x, const ActQuantParams& ap);

}  // namespace sigmaquant
