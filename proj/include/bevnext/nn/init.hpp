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
#include <vector>

#include "bevnext/common/rng.hpp"
#include "bevnext/nn/kernels.hpp"
#include "bevnext/nn/tensor.hpp"

namespace bevnext::nn
{

/// Values uniform in [-b, b] with b = sqrt(1 / fan_in).
Tensor init_uniform(std::vector<std::size_t> dims, std::size_t fan_in, Rng & rng);

ConvSpec make_conv(
  std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, std::size_t stride,
  std::size_t padding, Rng & rng);

ConvSpec zero_conv(
  std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, std::size_t stride,
  std::size_t padding);

/// widths = {in, hidden..., out}; activations has widths.size() - 1 entries.
MlpSpec make_mlp(const std::vector<std::size_t> & widths, const std::vector<Activation> & activations, Rng & rng);

}  // namespace bevnext::nn
