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

#include <optional>
#include <string>
#include <vector>

#include "sigmaquant/model.hpp"
#include "sigmaquant/quantizer.hpp"

namespace sigmaquant {

/// Bit assignment for one quantizable layer. The quantizer parameters are
/// filled in by calibration.
struct LayerPlan {
  std::string name;
  std::size_t layer_index = 0;  // index into ModelGraph::layers
  int bits_w = 8;
  int bits_a = 8;
  std::optional<ChannelQuantParams> weight_qparams;
  /// Range of this layer's input activations; without it activations pass
  /// through in float.
  std::optional<ActQuantParams> act_qparams;

  friend bool operator==(const LayerPlan&, const LayerPlan&) = default;
};

/// Per-layer weight/activation bitwidths covering exactly the quantizable
/// layers of a model, in model order.
struct BitPlan {
  std::vector<LayerPlan> layers;

  static BitPlan uniform(const ModelGraph& model, int bits_w, int bits_a = 8);

  bool calibrated() const;
  std::vector<int> weight_bits() const;
  std::vector<int> act_bits() const;
  /// Keeps bitwidths, drops calibration state.
  BitPlan bits_only() const;
  bool same_bits(const BitPlan& other) const;

  /// Throws Error unless the plan covers the model's quantizable layers and
  /// every bitwidth is in {2,4,6,8}.
  void validate(const ModelGraph& model) const;

  /// Compact "name:w/a" list, e.g. "dense0:8/8 dense1:4/8".
  std::string describe() const;

  friend bool operator==(const BitPlan&, const BitPlan&) = default;
};

}  // namespace sigmaquant
