// Copyright 2026 The bevnext Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bevnext/nn/tensor.hpp"

namespace bevnext::nn
{

/// 2-D convolution parameters. weights are [out, in, k, k], bias is [out].
struct ConvSpec
{
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_size = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Tensor weights;
  Tensor bias;

  void validate() const;
};

enum class Activation { kIdentity, kRelu };

struct MlpLayer
{
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]
  Activation activation = Activation::kIdentity;
};

struct MlpSpec
{
  std::vector<MlpLayer> layers;

  void validate() const;
  std::size_t in_width() const;
  std::size_t out_width() const;
};

/// Convolution over a CHW (treated as batch 1) or NCHW input. Accumulation
/// runs in double with a fixed loop nesting, so results are bit-reproducible.
Tensor conv2d(const Tensor & input, const ConvSpec & spec);

/// Output spatial extent of a convolution along one axis.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t padding);

/// Applies the MLP along the last axis of input; leading axes are preserved.
Tensor mlp_forward(const Tensor & input, const MlpSpec & spec);

/// Numerically stable softmax along axis.
Tensor softmax(const Tensor & input, std::size_t axis);

/// In-place softmax over a contiguous vector (max-subtracted).
void softmax_inplace(std::span<double> values);

void relu_inplace(Tensor & t);
void sigmoid_inplace(Tensor & t);

/// Concatenates CHW tensors along the channel axis.
Tensor concat_channels(std::span<const Tensor> parts);

/// Elementwise a + b; dims must match.
Tensor add(const Tensor & a, const Tensor & b);

/// Nearest-neighbour 2x upsampling of a CHW tensor.
Tensor upsample2x(const Tensor & input);

struct Point2
{
  double x = 0.0;  // column, continuous pixel coordinates
  double y = 0.0;  // row
};

struct Sample
{
  std::vector<float> values;  // one per channel
  bool valid = false;
};

/// Bilinear lookup into a CHW map. Pixel centres sit on integer
/// coordinates; a point is in bounds when 0 <= x <= W-1 and 0 <= y <= H-1.
/// Out-of-bounds points yield zeros with valid = false.
std::vector<Sample> bilinear_sample(const Tensor & map, std::span<const Point2> points);

/// Single-point variant writing into out (size C). Returns validity.
bool bilinear_sample_into(const Tensor & map, double x, double y, std::span<float> out);

}  // namespace bevnext::nn
