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

#include "sigmaquant/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sigmaquant/io.hpp"
#include "sigmaquant/random.hpp"

namespace sigmaquant {

namespace {

constexpr std::uint8_t kIdxUnsignedByte = 0x08;

struct IdxHeader {
  Shape dims;
  std::size_t payload_offset = 0;
};

std::uint32_t read_be32(const std::string& bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 3]));
}

IdxHeader parse_idx_header(const std::string& bytes,
                           const std::filesystem::path& path) {
  if (bytes.size() < 4 || bytes[0] != 0 || bytes[1] != 0 ||
      static_cast<std::uint8_t>(bytes[2]) != kIdxUnsignedByte ||
      bytes[3] == 0) {
    throw Error("bad IDX magic in " + path.string() +
                " (expected unsigned-byte payload)");
  }
  const std::size_t rank = static_cast<unsigned char>(bytes[3]);
  IdxHeader header;
  header.payload_offset = 4 + 4 * rank;
  if (bytes.size() < header.payload_offset) {
    throw Error("truncated IDX header in " + path.string());
  }
  for (std::size_t i = 0; i < rank; ++i) {
    header.dims.push_back(read_be32(bytes, 4 + 4 * i));
  }
  if (bytes.size() - header.payload_offset != shape_numel(header.dims)) {
    throw Error("IDX payload size mismatch in " + path.string() + ": dims " +
                shape_to_string(header.dims) + ", payload " +
                std::to_string(bytes.size() - header.payload_offset));
  }
  return header;
}

}  // namespace

Shape Dataset::sample_shape() const {
  const Shape& d = inputs.dims();
  return Shape(d.begin() + 1, d.end());
}

std::size_t Dataset::sample_numel() const {
  return shape_numel(sample_shape());
}

void Dataset::validate() const {
  if (inputs.rank() < 2) throw Error("dataset inputs need dims [N, ...]");
  if (inputs.dim(0) != labels.size()) {
    throw Error("dataset count mismatch: " + std::to_string(inputs.dim(0)) +
                " inputs, " + std::to_string(labels.size()) + " labels");
  }
  if (num_classes == 0) throw Error("dataset num_classes must be positive");
  for (std::uint32_t label : labels) {
    if (label >= num_classes) {
      throw Error("label " + std::to_string(label) + " >= num_classes " +
                  std::to_string(num_classes));
    }
  }
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), begin);
  return gather(idx);
}

Dataset Dataset::gather(const std::vector<std::size_t>& indices) const {
  const std::size_t stride = sample_numel();
  Shape dims = inputs.dims();
  dims[0] = indices.size();
  std::vector<float> data(indices.size() * stride);
  std::vector<std::uint32_t> out_labels(indices.size());
  const auto& src = inputs.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t s = indices[i];
    if (s >= size()) throw Error("dataset index out of range");
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(s * stride), stride,
                data.begin() + static_cast<std::ptrdiff_t>(i * stride));
    out_labels[i] = labels[s];
  }
  return Dataset{Tensor(std::move(dims), std::move(data)),
                 std::move(out_labels), num_classes};
}

Dataset load_idx_dataset(const std::filesystem::path& images_path,
                         const std::filesystem::path& labels_path) {
  const std::string image_bytes = read_file(images_path);
  const std::string label_bytes = read_file(labels_path);
  const IdxHeader images = parse_idx_header(image_bytes, images_path);
  const IdxHeader labels = parse_idx_header(label_bytes, labels_path);
  if (labels.dims.size() != 1) {
    throw Error("IDX label file " + labels_path.string() + " must be 1-D");
  }
  if (images.dims[0] != labels.dims[0]) {
    throw Error("IDX count mismatch: " + std::to_string(images.dims[0]) +
                " images, " + std::to_string(labels.dims[0]) + " labels");
  }
  Shape dims = images.dims;
  if (dims.size() == 1) dims.push_back(1);
  if (dims.size() == 3) dims.insert(dims.begin() + 1, 1);

  std::vector<float> data(shape_numel(dims));
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(
        static_cast<unsigned char>(image_bytes[images.payload_offset + i]) /
        255.0);
  }
  Dataset ds;
  ds.inputs = Tensor(std::move(dims), std::move(data));
  ds.labels.resize(labels.dims[0]);
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    ds.labels[i] = static_cast<unsigned char>(label_bytes[labels.payload_offset + i]);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = ds.labels.empty() ? 1 : max_label + 1;
  ds.validate();
  return ds;
}

Dataset gen_synthetic(std::uint64_t seed, std::size_t n, std::size_t d,
                      std::size_t classes, double separation) {
  if (n == 0 || d == 0 || classes == 0) {
    throw Error("gen_synthetic needs n, d, classes >= 1");
  }
  Rng rng(seed);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::uint32_t>(i % classes);
  }
  rng.shuffle(std::span<std::uint32_t>(labels));

  const double base = separation / std::sqrt(2.0);
  std::vector<float> data(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = labels[i];
    const std::size_t axis = c % d;
    const double offset = base * static_cast<double>(1 + c / d);
    for (std::size_t j = 0; j < d; ++j) {
      double v = rng.normal();
      if (j == axis) v += offset;
      data[i * d + j] = static_cast<float>(v);
    }
  }
  return Dataset{Tensor(Shape{n, d}, std::move(data)), std::move(labels),
                 classes};
}

}  // namespace sigmaquant
