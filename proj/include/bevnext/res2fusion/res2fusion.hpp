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

#include "bevnext/nn/kernels.hpp"
#include "bevnext/nn/tensor.hpp"

namespace bevnext::res2fusion
{

/// Chronological BEV history [B_{t-k+1}, ..., B_t]; the last frame is current.
struct FusionStack
{
  std::vector<nn::Tensor> frames;  // each [C, G, G]

  std::size_t size() const { return frames.size(); }
  void validate() const;
};

/// Which tensor feeds the next-older branch into a cascade stage.
enum class CascadeInput
{
  kConvolved,  // B'_i + B''_{i+1}, hierarchical multi-scale wiring (default)
  kReduced,    // B'_i + B'_{i+1}
};

/// Groups are indexed 0 (most recent, contains B_t) to g-1 (oldest).
/// reduce[i] is the 1x1 conv of group i (w*C -> C'); cascade[i-1] is the
/// 3x3 conv of group i for i >= 1 (C' -> C', padding 1); final maps g*C' to
/// the output width.
struct FusionConfig
{
  std::size_t window = 3;
  std::vector<nn::ConvSpec> reduce;
  std::vector<nn::ConvSpec> cascade;
  nn::ConvSpec final;
  CascadeInput cascade_input = CascadeInput::kConvolved;

  /// Checks the channel arithmetic for a history of `frames` grids with `channels` channels each.
  void validate(std::size_t frames, std::size_t channels) const;
};

/// ceil(k / w)
std::size_t group_count(std::size_t frames, std::size_t window);

/// Splits the history into channel-concatenated groups of `window` frames.
/// Group 0 ends at the current frame; missing frames of the oldest group are
/// zero grids placed before its oldest real frame.
std::vector<nn::Tensor> partition(const FusionStack & stack, std::size_t window);

std::vector<nn::Tensor> reduce_groups(std::span<const nn::Tensor> groups, std::span<const nn::ConvSpec> kernels);

/// B''_{g-1} = K(B'_{g-1}); B''_i = K(B'_i + B''_{i+1}) for 0 < i < g-1
/// (B'_{i+1} with CascadeInput::kReduced); B''_0 = B'_0.
std::vector<nn::Tensor> multiscale_cascade(
  std::span<const nn::Tensor> reduced, std::span<const nn::ConvSpec> kernels, CascadeInput input);

/// partition -> reduce -> cascade -> concat [B''_{g-1}; ...; B''_0] -> final 1x1.
/// Only the BEV tensors and kernels are read; no ego pose is involved.
nn::Tensor fuse(const FusionStack & stack, const FusionConfig & config);

/// Post-fusion block: a stride-2 3x3 conv with ReLU, nearest 2x upsampling,
/// channel concat with the input and a 1x1 merge.
struct NeckSpec
{
  nn::ConvSpec down;
  nn::ConvSpec merge;
};

nn::Tensor encode_neck(const nn::Tensor & fused, const NeckSpec & spec);

}  // namespace bevnext::res2fusion
