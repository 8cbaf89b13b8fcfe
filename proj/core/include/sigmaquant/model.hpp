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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sigmaquant/tensor.hpp"

namespace sigmaquant {

enum class LayerKind { Dense, Conv2d, Relu, MaxPool2d, Flatten, Softmax };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

/// Kind-specific integer hyperparameters. Fields not used by a kind stay 0.
struct LayerHyper {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 0;
  std::size_t padding = 0;

  friend bool operator==(const LayerHyper&, const LayerHyper&) = default;
};

struct LayerRecord {
  std::string name;
  LayerKind kind = LayerKind::Relu;
  LayerHyper hyper;
  std::optional<Tensor> weights;
  std::optional<Tensor> bias;

  bool quantizable() const {
    return kind == LayerKind::Dense || kind == LayerKind::Conv2d;
  }
  /// Output channels for conv, output features for dense, 0 otherwise.
  std::size_t output_channels() const;
  /// Weight element count; bias is not counted.
  std::size_t param_count() const { return weights ? weights->numel() : 0; }

  friend bool operator==(const LayerRecord&, const LayerRecord&) = default;
};

/// Linear chain of layers applied to a per-sample input of `input_shape`.
struct ModelGraph {
  std::string name;
  Shape input_shape;
  std::vector<LayerRecord> layers;

  /// Indices into `layers` of the dense/conv2d layers, in order.
  std::vector<std::size_t> quantizable_indices() const;

  /// Per-sample input shape of every layer plus the final output shape
  /// (size layers.size() + 1). Throws Error naming the offending layer when
  /// shapes do not compose.
  std::vector<Shape> layer_shapes() const;

  /// Checks shapes, weight dims and finiteness, and (unless disabled) that at
  /// least one layer is quantizable.
  void validate(bool require_quantizable = true) const;

  friend bool operator==(const ModelGraph&, const ModelGraph&) = default;
};

/// Output shape of a single layer given its input shape.
Shape layer_output_shape(const LayerRecord& layer, const Shape& input);

/// Weight dims implied by a layer's kind and hyperparameters.
Shape expected_weight_dims(const LayerRecord& layer);

/// Architecture description used to build a freshly initialized model.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::string name;           // auto-generated when empty
  std::size_t out = 0;        // dense out_features / conv out_channels
  std::size_t kernel = 0;     // conv / maxpool
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Builds a model with He-normal weights and zero biases; input sizes of
/// dense/conv layers are inferred from the preceding shapes.
ModelGraph build_model(std::string name, Shape input_shape,
                       const std::vector<LayerSpec>& layers,
                       std::uint64_t seed);

/// Loads a JSON manifest and its little-endian float32 blobs (paths relative
/// to the manifest's directory).
ModelGraph load_model(const std::filesystem::path& manifest_path);

/// Writes the manifest and one blob per tensor next to it. Every file is
/// written to a temporary name and renamed into place.
void save_model(const ModelGraph& model,
                const std::filesystem::path& manifest_path);

}  // namespace sigmaquant
