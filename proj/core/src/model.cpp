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

#include "sigmaquant/model.hpp"

#include <cmath>
#include <map>

#include "json.hpp"
#include "sigmaquant/io.hpp"
#include "sigmaquant/random.hpp"

namespace sigmaquant {

namespace {

using nlohmann::json;

constexpr int kManifestSchemaVersion = 1;

std::size_t conv_out(std::size_t in, std::size_t kernel, std::size_t stride,
                     std::size_t padding) {
  return (in + 2 * padding - kernel) / stride + 1;
}

[[noreturn]] void fail_layer(const LayerRecord& layer, const std::string& msg) {
  throw Error("layer '" + layer.name + "': " + msg);
}

json hyper_to_json(const LayerRecord& layer) {
  const LayerHyper& h = layer.hyper;
  switch (layer.kind) {
    case LayerKind::Dense:
      return {{"in_features", h.in_features}, {"out_features", h.out_features}};
    case LayerKind::Conv2d:
      return {{"in_channels", h.in_channels},
              {"out_channels", h.out_channels},
              {"kernel", h.kernel},
              {"stride", h.stride},
              {"padding", h.padding}};
    case LayerKind::MaxPool2d:
      return {{"kernel", h.kernel}, {"stride", h.stride}};
    default:
      return json::object();
  }
}

LayerHyper hyper_from_json(const json& j) {
  LayerHyper h;
  auto get = [&](const char* key, std::size_t& field) {
    if (j.contains(key)) field = j.at(key).get<std::size_t>();
  };
  get("in_features", h.in_features);
  get("out_features", h.out_features);
  get("in_channels", h.in_channels);
  get("out_channels", h.out_channels);
  get("kernel", h.kernel);
  get("stride", h.stride);
  get("padding", h.padding);
  return h;
}

std::string blob_name(const std::filesystem::path& manifest,
                      const std::string& layer, const char* role) {
  return manifest.stem().string() + "." + layer + "." + role + ".f32";
}

Tensor load_blob(const std::filesystem::path& dir, const std::string& file,
                 const LayerRecord& layer, Shape dims) {
  std::vector<float> values = decode_f32_le(read_file(dir / file));
  if (values.size() != shape_numel(dims)) {
    fail_layer(layer, "dimension mismatch: blob '" + file + "' holds " +
                          std::to_string(values.size()) +
                          " values, declared dims " + shape_to_string(dims) +
                          " need " + std::to_string(shape_numel(dims)));
  }
  return Tensor(std::move(dims), std::move(values));
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Softmax: return "softmax";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view text) {
  static const std::map<std::string_view, LayerKind> kinds = {
      {"dense", LayerKind::Dense},       {"conv2d", LayerKind::Conv2d},
      {"relu", LayerKind::Relu},         {"maxpool2d", LayerKind::MaxPool2d},
      {"flatten", LayerKind::Flatten},   {"softmax", LayerKind::Softmax}};
  auto it = kinds.find(text);
  if (it == kinds.end()) {
    throw Error("unknown layer kind '" + std::string(text) + "'");
  }
  return it->second;
}

std::size_t LayerRecord::output_channels() const {
  if (kind == LayerKind::Dense) return hyper.out_features;
  if (kind == LayerKind::Conv2d) return hyper.out_channels;
  return 0;
}

std::vector<std::size_t> ModelGraph::quantizable_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].quantizable()) out.push_back(i);
  }
  return out;
}

Shape expected_weight_dims(const LayerRecord& layer) {
  const LayerHyper& h = layer.hyper;
  switch (layer.kind) {
    case LayerKind::Dense: return {h.out_features, h.in_features};
    case LayerKind::Conv2d:
      return {h.out_channels, h.in_channels, h.kernel, h.kernel};
    default: return {};
  }
}

Shape layer_output_shape(const LayerRecord& layer, const Shape& input) {
  const LayerHyper& h = layer.hyper;
  switch (layer.kind) {
    case LayerKind::Dense:
      if (shape_numel(input) != h.in_features) {
        fail_layer(layer, "expects " + std::to_string(h.in_features) +
                              " input features, got shape " +
                              shape_to_string(input));
      }
      return {h.out_features};
    case LayerKind::Conv2d: {
      if (input.size() != 3 || input[0] != h.in_channels) {
        fail_layer(layer, "expects [" + std::to_string(h.in_channels) +
                              ",H,W] input, got " + shape_to_string(input));
      }
      if (h.kernel == 0 || h.stride == 0 ||
          input[1] + 2 * h.padding < h.kernel ||
          input[2] + 2 * h.padding < h.kernel) {
        fail_layer(layer, "kernel does not fit input " + shape_to_string(input));
      }
      return {h.out_channels, conv_out(input[1], h.kernel, h.stride, h.padding),
              conv_out(input[2], h.kernel, h.stride, h.padding)};
    }
    case LayerKind::MaxPool2d:
      if (input.size() != 3 || h.kernel == 0 || h.stride == 0 ||
          input[1] < h.kernel || input[2] < h.kernel) {
        fail_layer(layer, "pooling window does not fit input " +
                              shape_to_string(input));
      }
      return {input[0], conv_out(input[1], h.kernel, h.stride, 0),
              conv_out(input[2], h.kernel, h.stride, 0)};
    case LayerKind::Flatten: return {shape_numel(input)};
    case LayerKind::Relu:
    case LayerKind::Softmax: return input;
  }
  fail_layer(layer, "unsupported kind");
}

std::vector<Shape> ModelGraph::layer_shapes() const {
  std::vector<Shape> shapes;
  shapes.reserve(layers.size() + 1);
  shapes.push_back(input_shape);
  for (const LayerRecord& layer : layers) {
    shapes.push_back(layer_output_shape(layer, shapes.back()));
  }
  return shapes;
}

void ModelGraph::validate(bool require_quantizable) const {
  if (input_shape.empty() || shape_numel(input_shape) == 0) {
    throw Error("model '" + name + "': empty input shape");
  }
  layer_shapes();
  bool any_quantizable = false;
  for (const LayerRecord& layer : layers) {
    if (!layer.quantizable()) {
      if (layer.weights || layer.bias) fail_layer(layer, "unexpected tensors");
      continue;
    }
    any_quantizable = true;
    if (!layer.weights) fail_layer(layer, "missing weights");
    if (layer.weights->dims() != expected_weight_dims(layer)) {
      fail_layer(layer, "dimension mismatch: weights " +
                            shape_to_string(layer.weights->dims()) +
                            ", expected " +
                            shape_to_string(expected_weight_dims(layer)));
    }
    layer.weights->validate("layer '" + layer.name + "' weights");
    if (layer.bias) {
      if (layer.bias->dims() != Shape{layer.output_channels()}) {
        fail_layer(layer, "dimension mismatch: bias " +
                              shape_to_string(layer.bias->dims()));
      }
      layer.bias->validate("layer '" + layer.name + "' bias");
    }
  }
  if (require_quantizable && !any_quantizable) {
    throw Error("model '" + name + "' has no dense or conv2d layer");
  }
}

ModelGraph build_model(std::string name, Shape input_shape,
                       const std::vector<LayerSpec>& specs,
                       std::uint64_t seed) {
  ModelGraph model;
  model.name = std::move(name);
  model.input_shape = std::move(input_shape);
  Rng rng(seed);
  Shape current = model.input_shape;
  std::map<LayerKind, int> counters;
  for (const LayerSpec& spec : specs) {
    LayerRecord layer;
    layer.kind = spec.kind;
    layer.name = spec.name.empty()
                     ? std::string(to_string(spec.kind)) +
                           std::to_string(counters[spec.kind]++)
                     : spec.name;
    LayerHyper& h = layer.hyper;
    if (spec.kind == LayerKind::Dense) {
      h.in_features = shape_numel(current);
      h.out_features = spec.out;
    } else if (spec.kind == LayerKind::Conv2d) {
      if (current.size() != 3) {
        throw Error("conv layer '" + layer.name + "' needs a [C,H,W] input");
      }
      h.in_channels = current[0];
      h.out_channels = spec.out;
      h.kernel = spec.kernel;
      h.stride = spec.stride;
      h.padding = spec.padding;
    } else if (spec.kind == LayerKind::MaxPool2d) {
      h.kernel = spec.kernel;
      h.stride = spec.stride == 0 ? spec.kernel : spec.stride;
    }
    if (layer.quantizable()) {
      Shape wdims = expected_weight_dims(layer);
      std::size_t fan_in = shape_numel(wdims) / wdims[0];
      double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      Tensor w(wdims);
      for (float& v : w.values()) v = static_cast<float>(rng.normal() * stddev);
      layer.weights = std::move(w);
      layer.bias = Tensor(Shape{layer.output_channels()}, 0.0f);
    }
    current = layer_output_shape(layer, current);
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

ModelGraph load_model(const std::filesystem::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw Error("malformed manifest " + manifest_path.string() + ": " +
                e.what());
  }
  const std::filesystem::path dir = manifest_path.parent_path();
  ModelGraph model;
  try {
    model.name = manifest.value("name", std::string());
    model.input_shape = manifest.at("input_shape").get<Shape>();
    for (const json& jl : manifest.at("layers")) {
      LayerRecord layer;
      layer.name = jl.at("name").get<std::string>();
      layer.kind = parse_layer_kind(jl.at("kind").get<std::string>());
      if (jl.contains("hyper")) layer.hyper = hyper_from_json(jl.at("hyper"));
      if (jl.contains("weight_blob")) {
        layer.weights = load_blob(dir, jl.at("weight_blob").get<std::string>(),
                                  layer, expected_weight_dims(layer));
      }
      if (jl.contains("bias_blob")) {
        layer.bias = load_blob(dir, jl.at("bias_blob").get<std::string>(),
                               layer, Shape{layer.output_channels()});
      }
      model.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw Error("malformed manifest " + manifest_path.string() + ": " +
                e.what());
  }
  model.validate(false);
  return model;
}

void save_model(const ModelGraph& model,
                const std::filesystem::path& manifest_path) {
  model.validate(false);
  const std::filesystem::path dir = manifest_path.parent_path();
  json layers = json::array();
  for (const LayerRecord& layer : model.layers) {
    json jl = {{"name", layer.name},
               {"kind", std::string(to_string(layer.kind))},
               {"hyper", hyper_to_json(layer)}};
    if (layer.weights) {
      std::string file = blob_name(manifest_path, layer.name, "weight");
      write_file_atomic(dir / file, encode_f32_le(layer.weights->data()));
      jl["weight_blob"] = file;
    }
    if (layer.bias) {
      std::string file = blob_name(manifest_path, layer.name, "bias");
      write_file_atomic(dir / file, encode_f32_le(layer.bias->data()));
      jl["bias_blob"] = file;
    }
    layers.push_back(std::move(jl));
  }
  json manifest = {{"schema_version", kManifestSchemaVersion},
                   {"name", model.name},
                   {"input_shape", model.input_shape},
                   {"layers", std::move(layers)}};
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

}  // namespace sigmaquant
