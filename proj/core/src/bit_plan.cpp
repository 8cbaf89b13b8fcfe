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

#include "sigmaquant/bit_plan.hpp"

namespace sigmaquant {

BitPlan BitPlan::uniform(const ModelGraph& model, int bits_w, int bits_a) {
  require_allowed_bits(bits_w);
  require_allowed_bits(bits_a);
  BitPlan plan;
  for (std::size_t idx : model.quantizable_indices()) {
    LayerPlan lp;
    lp.name = model.layers[idx].name;
    lp.layer_index = idx;
    lp.bits_w = bits_w;
    lp.bits_a = bits_a;
    plan.layers.push_back(std::move(lp));
  }
  return plan;
}

bool BitPlan::calibrated() const {
  for (const LayerPlan& lp : layers) {
    if (!lp.weight_qparams || !lp.act_qparams) return false;
  }
  return !layers.empty();
}

std::vector<int> BitPlan::weight_bits() const {
  std::vector<int> out;
  for (const LayerPlan& lp : layers) out.push_back(lp.bits_w);
  return out;
}

std::vector<int> BitPlan::act_bits() const {
  std::vector<int> out;
  for (const LayerPlan& lp : layers) out.push_back(lp.bits_a);
  return out;
}

BitPlan BitPlan::bits_only() const {
  BitPlan out = *this;
  for (LayerPlan& lp : out.layers) {
    lp.weight_qparams.reset();
    lp.act_qparams.reset();
  }
  return out;
}

bool BitPlan::same_bits(const BitPlan& other) const {
  return weight_bits() == other.weight_bits() && act_bits() == other.act_bits();
}

void BitPlan::validate(const ModelGraph& model) const {
  const std::vector<std::size_t> qidx = model.quantizable_indices();
  if (layers.size() != qidx.size()) {
    throw Error("plan covers " + std::to_string(layers.size()) +
                " layers but the model has " + std::to_string(qidx.size()) +
                " quantizable layers");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerPlan& lp = layers[i];
    if (lp.layer_index != qidx[i] || lp.name != model.layers[qidx[i]].name) {
      throw Error("plan entry '" + lp.name + "' does not match model layer '" +
                  model.layers[qidx[i]].name + "'");
    }
    require_allowed_bits(lp.bits_w);
    require_allowed_bits(lp.bits_a);
    if (lp.weight_qparams &&
        (lp.weight_qparams->bits() != lp.bits_w ||
         lp.weight_qparams->channels.size() !=
             model.layers[lp.layer_index].output_channels())) {
      throw Error("plan entry '" + lp.name +
                  "' has stale weight quantizer parameters");
    }
    if (lp.act_qparams && lp.act_qparams->bits != lp.bits_a) {
      throw Error("plan entry '" + lp.name +
                  "' has stale activation quantizer parameters");
    }
  }
}

std::string BitPlan::describe() const {
  std::string out;
  for (const LayerPlan& lp : layers) {
    if (!out.empty()) out += ' ';
    out += lp.name + ":" + std::to_string(lp.bits_w) + "/" +
           std::to_string(lp.bits_a);
  }
  return out;
}

}  // namespace sigmaquant
