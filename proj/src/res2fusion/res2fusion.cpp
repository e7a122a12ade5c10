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

#include "bevnext/res2fusion/res2fusion.hpp"

#include <string>

#include "bevnext/common/error.hpp"

namespace bevnext::res2fusion
{

void FusionStack::validate() const
{
  if (frames.empty()) {
    throw ShapeError("fusion stack: at least one frame is required");
  }
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].rank() != 3 || frames[f].dims() != frames.front().dims()) {
      throw ShapeError(
        "fusion stack: frame " + std::to_string(f) + " is " + nn::dims_to_string(frames[f].dims()) +
        ", expected " + nn::dims_to_string(frames.front().dims()));
    }
  }
}

std::size_t group_count(std::size_t frames, std::size_t window)
{
  if (frames == 0 || window == 0) {
    throw ConfigError("res2fusion: frame count and window size must be positive");
  }
  return (frames + window - 1) / window;
}

void FusionConfig::validate(std::size_t frames, std::size_t channels) const
{
  const std::size_t g = group_count(frames, window);
  if (reduce.size() != g) {
    throw ConfigError(
      "res2fusion: " + std::to_string(g) + " groups need " + std::to_string(g) + " reduce kernels, got " +
      std::to_string(reduce.size()));
  }
  if (cascade.size() != g - 1) {
    throw ConfigError(
      "res2fusion: " + std::to_string(g) + " groups need " + std::to_string(g - 1) +
      " cascade kernels, got " + std::to_string(cascade.size()));
  }
  const std::size_t reduced = reduce.front().out_channels;
  for (std::size_t i = 0; i < g; ++i) {
    reduce[i].validate();
    if (reduce[i].kernel_size != 1 || reduce[i].in_channels != window * channels ||
        reduce[i].out_channels != reduced) {
      throw ShapeError("res2fusion: reduce kernel " + std::to_string(i) + " must be 1x1 from w*C to C'");
    }
  }
  for (std::size_t i = 0; i + 1 < g; ++i) {
    cascade[i].validate();
    if (cascade[i].kernel_size != 3 || cascade[i].padding != 1 || cascade[i].stride != 1 ||
        cascade[i].in_channels != reduced || cascade[i].out_channels != reduced) {
      throw ShapeError(
        "res2fusion: cascade kernel " + std::to_string(i + 1) + " must be 3x3, stride 1, padding 1, C' -> C'");
    }
  }
  final.validate();
  if (final.kernel_size != 1 || final.in_channels != g * reduced) {
    throw ShapeError("res2fusion: final kernel must be 1x1 from g*C' channels");
  }
}

std::vector<nn::Tensor> partition(const FusionStack & stack, std::size_t window)
{
  stack.validate();
  const std::size_t k = stack.size();
  const std::size_t g = group_count(k, window);
  const auto & dims = stack.frames.front().dims();
  const std::size_t frame_size = stack.frames.front().size();

  std::vector<nn::Tensor> groups;
  groups.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    std::vector<float> data;
    data.reserve(window * frame_size);
    // slots run oldest to newest; group i ends at frame k - 1 - i * w
    for (std::size_t slot = 0; slot < window; ++slot) {
      const auto frame = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>((i + 1) * window) +
                         static_cast<std::ptrdiff_t>(slot);
      if (frame < 0) {
        data.insert(data.end(), frame_size, 0.0f);
      } else {
        const auto & src = stack.frames[static_cast<std::size_t>(frame)].data();
        data.insert(data.end(), src.begin(), src.end());
      }
    }
    groups.emplace_back(std::vector<std::size_t>{window * dims[0], dims[1], dims[2]}, std::move(data));
  }
  return groups;
}

std::vector<nn::Tensor> reduce_groups(std::span<const nn::Tensor> groups, std::span<const nn::ConvSpec> kernels)
{
  if (groups.size() != kernels.size()) {
    throw ShapeError(
      "reduce_groups: " + std::to_string(groups.size()) + " groups but " + std::to_string(kernels.size()) +
      " kernels");
  }
  std::vector<nn::Tensor> reduced(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    reduced[i] = nn::conv2d(groups[i], kernels[i]);
  }
  return reduced;
}

std::vector<nn::Tensor> multiscale_cascade(
  std::span<const nn::Tensor> reduced, std::span<const nn::ConvSpec> kernels, CascadeInput input)
{
  const std::size_t g = reduced.size();
  if (g == 0) {
    throw ShapeError("multiscale_cascade: no groups");
  }
  if (kernels.size() != g - 1) {
    throw ShapeError(
      "multiscale_cascade: " + std::to_string(g) + " groups need " + std::to_string(g - 1) + " kernels");
  }
  for (std::size_t i = 1; i < g; ++i) {
    if (reduced[i].dims() != reduced[0].dims()) {
      throw ShapeError("multiscale_cascade: group " + std::to_string(i) + " dims differ from group 0");
    }
  }
  std::vector<nn::Tensor> out(g);
  for (std::size_t i = g; i-- > 1;) {
    const auto & kernel = kernels[i - 1];
    if (i == g - 1) {
      out[i] = nn::conv2d(reduced[i], kernel);
    } else {
      const auto & older = input == CascadeInput::kConvolved ? out[i + 1] : reduced[i + 1];
      out[i] = nn::conv2d(nn::add(reduced[i], older), kernel);
    }
  }
  out[0] = reduced[0];
  return out;
}

nn::Tensor fuse(const FusionStack & stack, const FusionConfig & config)
{
  stack.validate();
  config.validate(stack.size(), stack.frames.front().dim(0));
  const auto groups = partition(stack, config.window);
  const auto reduced = reduce_groups(groups, config.reduce);
  const auto cascaded = multiscale_cascade(reduced, config.cascade, config.cascade_input);
  const std::vector<nn::Tensor> ordered(cascaded.rbegin(), cascaded.rend());
  return nn::conv2d(nn::concat_channels(ordered), config.final);
}

nn::Tensor encode_neck(const nn::Tensor & fused, const NeckSpec & spec)
{
  if (fused.rank() != 3 || fused.dim(1) % 2 != 0 || fused.dim(2) % 2 != 0) {
    throw ShapeError("encode_neck: input must be CHW with even spatial dims, got " + nn::dims_to_string(fused.dims()));
  }
  if (spec.down.stride != 2 || spec.down.kernel_size != 3 || spec.down.padding != 1) {
    throw ShapeError("encode_neck: down conv must be 3x3, stride 2, padding 1");
  }
  nn::Tensor down = nn::conv2d(fused, spec.down);
  nn::relu_inplace(down);
  const nn::Tensor parts[] = {fused, nn::upsample2x(down)};
  return nn::conv2d(nn::concat_channels(parts), spec.merge);
}

}  // namespace bevnext::res2fusion
