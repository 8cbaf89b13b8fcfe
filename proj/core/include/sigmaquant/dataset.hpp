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
#include <vector>

#include "sigmaquant/tensor.hpp"

namespace sigmaquant {

/// Labelled samples. `inputs` has dims [N, ...per-sample dims].
struct Dataset {
  Tensor inputs;
  std::vector<std::uint32_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const;
  std::size_t sample_numel() const;

  /// Checks labels.size() == N and every label < num_classes.
  void validate() const;

  /// Copy of samples [begin, begin + count).
  Dataset slice(std::size_t begin, std::size_t count) const;
  /// Copy of the samples at `indices`, in that order.
  Dataset gather(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Parses an IDX image file (unsigned-byte payload, any rank >= 1) and an
/// IDX label file. Pixels are scaled by 1/255. Three-dimensional image files
/// ([N, rows, cols]) become inputs of dims [N, 1, rows, cols].
Dataset load_idx_dataset(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path);

/// Class-conditional Gaussian blobs with unit per-dimension noise.
///
/// Class c has mean (separation / sqrt(2)) * e_(c mod d) * (1 + c / d)
/// (integer division), so any two of the first d classes sit exactly
/// `separation` apart. Labels cycle 0,1,..,classes-1 before a seeded shuffle.
Dataset gen_synthetic(std::uint64_t seed, std::size_t n, std::size_t d,
                      std::size_t classes, double separation);

}  // namespace sigmaquant
