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

#include "sigmaquant/tensor.hpp"

#include <cmath>
#include <utility>

namespace sigmaquant {

std::size_t shape_numel(const Shape& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

std::string shape_to_string(const Shape& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape dims, float fill)
    : dims_(std::move(dims)), data_(shape_numel(dims_), fill) {}

Tensor::Tensor(Shape dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (shape_numel(dims_) != data_.size()) {
    throw Error("tensor dims " + shape_to_string(dims_) + " need " +
                std::to_string(shape_numel(dims_)) + " values, got " +
                std::to_string(data_.size()));
  }
}

void Tensor::validate(const std::string& what) const {
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(what + ": non-finite value in tensor");
  }
}

Tensor Tensor::reshaped(Shape dims) const {
  return Tensor(std::move(dims), data_);
}

}  // namespace sigmaquant
