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

#include "sigmaquant/hw_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "json.hpp"
#include "sigmaquant/io.hpp"

namespace sigmaquant {

namespace {

using nlohmann::json;

const char* const kUnitKinds[] = {"fp32", "fp16", "bf16", "int8", "shift_add"};

std::uint64_t pattern_of(long code, int bits) {
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  return static_cast<std::uint64_t>(code) & mask;
}

double ratio(double value, double baseline) {
  if (!(baseline > 0.0)) throw Error("hardware baseline must be positive");
  return value / baseline;
}

}  // namespace

Q17Value Q17Value::from_raw(int raw) {
  if (raw < -128 || raw > 127) {
    throw Error("Q1.7 raw value " + std::to_string(raw) + " out of range");
  }
  return Q17Value{static_cast<std::int8_t>(raw)};
}

int add_cycles(long code, int bits) {
  return std::popcount(pattern_of(code, bits));
}

int mac_cycles(long code, int bits) { return std::max(1, add_cycles(code, bits)); }

MacResult shift_add_mac(Q17Value a, long m, int bits_m) {
  require_allowed_bits(bits_m);
  const long limit = (1L << (bits_m - 1)) - 1;
  if (m < -limit || m > limit) {
    throw Error("multiplier " + std::to_string(m) + " outside the " +
                std::to_string(bits_m) + "-bit signed range");
  }
  const std::uint64_t pattern = pattern_of(m, bits_m);
  const std::uint64_t low_mask = (std::uint64_t{1} << bits_m) - 1;

  // Product register split into a signed high half and a bits_m-wide low
  // half that collects the bits shifted out of the high half.
  std::int64_t high = 0;
  std::uint64_t low = 0;
  int cycles = 0;
  for (int i = 0; i < bits_m; ++i) {
    if ((pattern >> i) & 1u) {
      high += (i == bits_m - 1) ? -std::int64_t{a.raw} : std::int64_t{a.raw};
      ++cycles;
    }
    low = (low >> 1) | ((static_cast<std::uint64_t>(high) & 1u) << (bits_m - 1));
    high >>= 1;  // arithmetic shift
  }
  low &= low_mask;
  // Truncate to the multiplicand width: keep high and the top bit of low.
  const std::int64_t truncated =
      high * 2 + static_cast<std::int64_t>(low >> (bits_m - 1));
  const auto clamped = static_cast<int>(std::clamp<std::int64_t>(truncated, -128, 127));
  return MacResult{Q17Value::from_raw(clamped), std::max(1, cycles)};
}

std::size_t weight_reuse(const ModelGraph& model, std::size_t layer_index) {
  const LayerRecord& layer = model.layers.at(layer_index);
  if (layer.kind == LayerKind::Dense) return 1;
  if (layer.kind != LayerKind::Conv2d) return 0;
  const Shape out = model.layer_shapes()[layer_index + 1];
  return out[1] * out[2];
}

std::uint64_t macs_per_layer(const ModelGraph& model, std::size_t layer_index) {
  const LayerRecord& layer = model.layers.at(layer_index);
  if (!layer.quantizable()) return 0;
  const LayerHyper& h = layer.hyper;
  if (layer.kind == LayerKind::Dense) {
    return std::uint64_t{h.in_features} * h.out_features;
  }
  return std::uint64_t{weight_reuse(model, layer_index)} * h.out_channels *
         h.in_channels * h.kernel * h.kernel;
}

std::uint64_t layer_cycles(const ModelGraph& model, std::size_t layer_index,
                           const ChannelQuantParams& weight_qparams) {
  const LayerRecord& layer = model.layers.at(layer_index);
  if (!layer.quantizable()) return 0;
  const int bits = weight_qparams.bits();
  std::uint64_t per_inference = 0;
  for (long code : quantize_codes(*layer.weights, weight_qparams)) {
    per_inference += static_cast<std::uint64_t>(mac_cycles(code, bits));
  }
  return per_inference * weight_reuse(model, layer_index);
}

std::uint64_t model_size_bytes(const ModelGraph& model, const BitPlan& plan) {
  plan.validate(model);
  std::uint64_t total = 0;
  for (const LayerPlan& lp : plan.layers) {
    const std::uint64_t bits =
        std::uint64_t{model.layers[lp.layer_index].param_count()} *
        static_cast<std::uint64_t>(lp.bits_w);
    total += (bits + 7) / 8;
  }
  return total;
}

std::uint64_t bops(const ModelGraph& model, const BitPlan& plan) {
  plan.validate(model);
  std::uint64_t total = 0;
  for (const LayerPlan& lp : plan.layers) {
    total += static_cast<std::uint64_t>(lp.bits_w) *
             static_cast<std::uint64_t>(lp.bits_a) *
             macs_per_layer(model, lp.layer_index);
  }
  return total;
}

std::uint64_t float_model_size_bytes(const ModelGraph& model) {
  std::uint64_t total = 0;
  for (std::size_t idx : model.quantizable_indices()) {
    total += std::uint64_t{model.layers[idx].param_count()} * 4;
  }
  return total;
}

HwCostTable HwCostTable::defaults() {
  // Energy coefficients in pJ per um^2 of unit area. They only order the
  // units sensibly; real per-event energies must come from a user table.
  constexpr double kMultiplyPerArea = 1e-3;
  constexpr double kAddPerArea = 2.5e-4;
  HwCostTable table;
  table.placeholder_energies = true;
  const std::pair<const char*, double> areas[] = {{"fp32", 3218.3},
                                                  {"fp16", 3837.9},
                                                  {"bf16", 3501.9},
                                                  {"int8", 2103.4},
                                                  {"shift_add", 1635.4}};
  for (const auto& [kind, area] : areas) {
    UnitCost cost;
    cost.area_um2 = area;
    cost.energy_multiply = kMultiplyPerArea * area;
    cost.energy_accumulate = kAddPerArea * area;
    cost.energy_per_cycle = kAddPerArea * area;
    table.units[kind] = cost;
  }
  return table;
}

const UnitCost& HwCostTable::unit(const std::string& kind) const {
  auto it = units.find(kind);
  if (it == units.end()) throw Error("cost table has no entry for '" + kind + "'");
  return it->second;
}

void HwCostTable::validate() const {
  const UnitCost& i8 = unit("int8");
  const UnitCost& sa = unit("shift_add");
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw Error(std::string("cost table entry ") + what + " must be positive");
  };
  positive(i8.area_um2, "int8.area_um2");
  positive(i8.energy_multiply, "int8.energy_multiply");
  positive(i8.energy_accumulate, "int8.energy_accumulate");
  positive(sa.area_um2, "shift_add.area_um2");
  positive(sa.energy_accumulate, "shift_add.energy_accumulate");
  positive(sa.energy_per_cycle, "shift_add.energy_per_cycle");
}

HwCostTable HwCostTable::scaled_energies(double factor) const {
  HwCostTable out = *this;
  for (auto& [kind, cost] : out.units) {
    cost.energy_multiply *= factor;
    cost.energy_accumulate *= factor;
    cost.energy_per_cycle *= factor;
  }
  return out;
}

HwCostTable load_cost_table(const std::filesystem::path& path) {
  HwCostTable table;
  try {
    const json j = json::parse(read_file(path));
    table.energy_unit = j.value("energy_unit", std::string("pJ"));
    table.placeholder_energies = j.value("placeholder_energies", false);
    for (const auto& [kind, entry] : j.at("units").items()) {
      UnitCost cost;
      cost.area_um2 = entry.value("area_um2", 0.0);
      cost.energy_multiply = entry.value("energy_multiply", 0.0);
      cost.energy_accumulate = entry.value("energy_accumulate", 0.0);
      cost.energy_per_cycle = entry.value("energy_per_cycle", 0.0);
      table.units[kind] = cost;
    }
  } catch (const json::exception& e) {
    throw Error("malformed cost table " + path.string() + ": " + e.what());
  }
  table.validate();
  return table;
}

std::string cost_table_to_json(const HwCostTable& table) {
  json units = json::object();
  for (const char* kind : kUnitKinds) {
    auto it = table.units.find(kind);
    if (it == table.units.end()) continue;
    units[kind] = {{"area_um2", it->second.area_um2},
                   {"energy_multiply", it->second.energy_multiply},
                   {"energy_accumulate", it->second.energy_accumulate},
                   {"energy_per_cycle", it->second.energy_per_cycle}};
  }
  json j = {{"schema_version", 1},
            {"area_unit", "um^2"},
            {"energy_unit", table.energy_unit},
            {"placeholder_energies", table.placeholder_energies},
            {"units", units}};
  if (table.placeholder_energies) {
    j["note"] =
        "energies are area-proportional placeholders, not physical values";
  }
  return j.dump(2) + "\n";
}

BitPlan freeze_weight_qparams(const ModelGraph& model, BitPlan plan) {
  plan.validate(model);
  for (LayerPlan& lp : plan.layers) {
    if (!lp.weight_qparams) {
      lp.weight_qparams =
          per_channel_qparams(*model.layers[lp.layer_index].weights, lp.bits_w);
    }
  }
  return plan;
}

HwReport energy_report(const ModelGraph& model, const BitPlan& plan,
                       const HwCostTable& table) {
  table.validate();
  plan.validate(model);
  const UnitCost& sa = table.unit("shift_add");
  const UnitCost& i8 = table.unit("int8");
  HwReport report;
  for (const LayerPlan& lp : plan.layers) {
    if (!lp.weight_qparams) {
      throw Error("layer '" + lp.name + "' has no frozen weight parameters");
    }
    LayerHw row;
    row.name = lp.name;
    row.bits_w = lp.bits_w;
    row.bits_a = lp.bits_a;
    row.macs = macs_per_layer(model, lp.layer_index);
    row.cycles = layer_cycles(model, lp.layer_index, *lp.weight_qparams);
    row.energy = static_cast<double>(row.cycles) * sa.energy_per_cycle +
                 static_cast<double>(row.macs) * sa.energy_accumulate;
    row.size_bytes =
        (std::uint64_t{model.layers[lp.layer_index].param_count()} *
             static_cast<std::uint64_t>(lp.bits_w) + 7) / 8;
    row.bops = static_cast<std::uint64_t>(lp.bits_w) *
               static_cast<std::uint64_t>(lp.bits_a) * row.macs;

    report.totals.macs += row.macs;
    report.totals.cycles += row.cycles;
    report.totals.energy += row.energy;
    report.totals.size_bytes += row.size_bytes;
    report.totals.bops += row.bops;
    report.int8_baseline.size_bytes += model.layers[lp.layer_index].param_count();
    report.layers.push_back(std::move(row));
  }
  HwTotals& base = report.int8_baseline;
  base.macs = report.totals.macs;
  base.cycles = report.totals.macs;
  base.energy = static_cast<double>(report.totals.macs) *
                (i8.energy_multiply + i8.energy_accumulate);
  base.bops = 64 * report.totals.macs;

  report.cycles_ratio = ratio(static_cast<double>(report.totals.cycles),
                              static_cast<double>(base.cycles));
  report.energy_ratio = ratio(report.totals.energy, base.energy);
  report.size_ratio = ratio(static_cast<double>(report.totals.size_bytes),
                            static_cast<double>(base.size_bytes));
  report.bops_ratio = ratio(static_cast<double>(report.totals.bops),
                            static_cast<double>(base.bops));
  report.area_ratio = ratio(sa.area_um2, i8.area_um2);
  return report;
}

}  // namespace sigmaquant
