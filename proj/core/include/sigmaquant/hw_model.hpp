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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sigmaquant/bit_plan.hpp"

namespace sigmaquant {

/// Q1.7 fixed point: raw / 128, raw in [-128, 127].
struct Q17Value {
  std::int8_t raw = 0;

  static Q17Value from_raw(int raw);
  double real() const { return raw / 128.0; }
  friend bool operator==(Q17Value, Q17Value) = default;
};

struct MacResult {
  Q17Value product;
  int cycles = 0;
};

/// Active shift-add cycles for a multiplier code: the number of 1 bits in its
/// `bits`-wide two's-complement pattern. Each 1 bit costs one addition (the
/// sign bit a subtraction); runs of 0 bits are absorbed as extra shifts in the
/// same cycle.
int add_cycles(long code, int bits);

/// Cycles the MAC unit is occupied by one multiplication: add_cycles, but at
/// least one (a zero multiplier still issues).
int mac_cycles(long code, int bits);

/// Simulates an 8-bit x bits_m shift-add multiplication.
///
/// `a` is the Q1.7 multiplicand and `m` a signed Q1.(bits_m - 1) multiplier
/// code in [-(2^(bits_m-1) - 1), 2^(bits_m-1) - 1]. Multiplier bits are
/// consumed LSB first; every 1 bit adds `a` (the sign bit subtracts it) into
/// the high half of a double-width product register, which then shifts right
/// by one. The result keeps the upper 8 bits, i.e. it is the exact product
/// floored to Q1.7 and clamped to the int8 range.
MacResult shift_add_mac(Q17Value a, long m, int bits_m);

/// Number of outputs each weight contributes to per inference: output
/// height * width for conv2d, 1 for dense.
std::size_t weight_reuse(const ModelGraph& model, std::size_t layer_index);

/// in * out for dense; out_h * out_w * out_c * in_c * k * k for conv2d;
/// 0 for layers without weights.
std::uint64_t macs_per_layer(const ModelGraph& model, std::size_t layer_index);

/// Shift-add cycles for one inference of a layer: sum over weights of
/// mac_cycles(code) * weight_reuse.
std::uint64_t layer_cycles(const ModelGraph& model, std::size_t layer_index,
                           const ChannelQuantParams& weight_qparams);

/// Sum over quantizable layers of ceil(param_count * bits_w / 8). Biases are
/// not counted.
std::uint64_t model_size_bytes(const ModelGraph& model, const BitPlan& plan);

/// Sum over quantizable layers of bits_w * bits_a * MACs.
std::uint64_t bops(const ModelGraph& model, const BitPlan& plan);

/// Float32 weight storage, the reference for size ratios.
std::uint64_t float_model_size_bytes(const ModelGraph& model);

/// Area and per-event energies of one arithmetic unit.
struct UnitCost {
  double area_um2 = 0.0;
  double energy_multiply = 0.0;    // per multiplication
  double energy_accumulate = 0.0;  // per accumulation
  double energy_per_cycle = 0.0;   // per shift-add cycle
};

/// Cost constants per unit kind (fp32, fp16, bf16, int8, shift_add).
struct HwCostTable {
  std::string energy_unit = "pJ";
  bool placeholder_energies = false;
  std::map<std::string, UnitCost> units;

  /// Areas of the synthesized MAC units; energies are area-proportional
  /// placeholders (flagged by placeholder_energies), not measurements.
  static HwCostTable defaults();

  const UnitCost& unit(const std::string& kind) const;
  /// Every entry referenced by energy_report must be present and positive.
  void validate() const;
  /// Same table with every energy multiplied by `factor`.
  HwCostTable scaled_energies(double factor) const;
};

HwCostTable load_cost_table(const std::filesystem::path& path);
std::string cost_table_to_json(const HwCostTable& table);

struct LayerHw {
  std::string name;
  int bits_w = 8;
  int bits_a = 8;
  std::uint64_t macs = 0;
  std::uint64_t cycles = 0;
  double energy = 0.0;
  std::uint64_t size_bytes = 0;
  std::uint64_t bops = 0;
};

struct HwTotals {
  std::uint64_t macs = 0;
  std::uint64_t cycles = 0;
  double energy = 0.0;
  std::uint64_t size_bytes = 0;
  std::uint64_t bops = 0;
};

/// Shift-add execution of a plan next to the INT8 MAC baseline (one cycle
/// per MAC, multiply + accumulate energy per MAC, 8-bit weights).
struct HwReport {
  std::vector<LayerHw> layers;
  HwTotals totals;
  HwTotals int8_baseline;
  double cycles_ratio = 0.0;
  double energy_ratio = 0.0;
  double size_ratio = 0.0;
  double bops_ratio = 0.0;
  double area_ratio = 0.0;  // shift_add area / int8 area
};

/// Requires weight quantizer parameters on every plan layer (see
/// freeze_weight_qparams).
HwReport energy_report(const ModelGraph& model, const BitPlan& plan,
                       const HwCostTable& table);

/// Fills missing per-channel weight parameters from the model's current
/// weights at each layer's bits_w.
BitPlan freeze_weight_qparams(const ModelGraph& model, BitPlan plan);

}  // namespace sigmaquant
