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

#include "bevnext/nn/init.hpp"

#include <cmath>

#include "bevnext/common/error.hpp"

namespace bevnext::nn
{

Tensor init_uniform(std::vector<std::size_t> dims, std::size_t fan_in, Rng & rng)
{
  if (fan_in == 0) {
    throw ShapeError("init_uniform: fan_in must be positive");
  }
  Tensor t(std::move(dims));
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  for (auto & v : t.data()) {
    v = static_cast<float>(rng.uniform(-bound, bound));
  }
  return t;
}

ConvSpec make_conv(
  std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, std::size_t stride,
  std::size_t padding, Rng & rng)
{
  ConvSpec spec{in_channels, out_channels, kernel_size, stride, padding, {}, {}};
  const std::size_t fan_in = in_channels * kernel_size * kernel_size;
  spec.weights = init_uniform({out_channels, in_channels, kernel_size, kernel_size}, fan_in, rng);
  spec.bias = init_uniform({out_channels}, fan_in, rng);
  return spec;
}

ConvSpec zero_conv(
  std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, std::size_t stride,
  std::size_t padding)
{
  return ConvSpec{
    in_channels,
    out_channels,
    kernel_size,
    stride,
    padding,
    Tensor({out_channels, in_channels, kernel_size, kernel_size}),
    Tensor({out_channels})};
}

MlpSpec make_mlp(const std::vector<std::size_t> & widths, const std::vector<Activation> & activations, Rng & rng)
{
  if (widths.size() < 2 || activations.size() != widths.size() - 1) {
    throw ShapeError("make_mlp: need n+1 widths for n activations");
  }
  MlpSpec spec;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MlpLayer layer;
    layer.weight = init_uniform({widths[l + 1], widths[l]}, widths[l], rng);
    layer.bias = init_uniform({widths[l + 1]}, widths[l], rng);
    layer.activation = activations[l];
    spec.layers.push_back(std::move(layer));
  }
  return spec;
}

}  // namespace bevnext::nn
