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

namespace sigmaquant::testing {

/// Compares the library's straight-through weight gradients on a small
/// dense-relu-dense network against central finite differences of the
/// double-precision reference surrogate.
struct SteProbeResult {
  std::size_t probed = 0;          // weights strictly inside the clip range
  double max_relative_error = 0.0;  // |g - fd| / max(|fd|, 1e-3)
  std::size_t clipped = 0;         // weights pushed outside the clip range
  bool clipped_all_zero = true;     // every clipped weight got exactly 0
};

/// Probes at least `points` inside weights, drawing fresh networks from
/// consecutive seeds starting at `seed` until enough are collected.
SteProbeResult run_ste_probe(std::uint64_t seed, std::size_t points);

}  // namespace sigmaquant::testing
