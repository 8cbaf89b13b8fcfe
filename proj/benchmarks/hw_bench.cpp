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

#include <benchmark/benchmark.h>

#include "sigmaquant/hw_model.hpp"

namespace sq = sigmaquant;

namespace {

void BM_ShiftAddMac(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  const long q = (1L << (bits - 1)) - 1;
  for (auto _ : state) {
    for (int a = -128; a <= 127; ++a) {
      for (long m = -q; m <= q; ++m) {
        benchmark::DoNotOptimize(sq::shift_add_mac(sq::Q17Value::from_raw(a), m, bits));
      }
    }
  }
  state.SetItemsProcessed(state.iterations() * 256 * (2 * q + 1));
}
BENCHMARK(BM_ShiftAddMac)->DenseRange(2, 8, 2);

}  // namespace
