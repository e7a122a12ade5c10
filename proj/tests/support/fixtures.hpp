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

#include <cstdint>
#include <vector>

#include "bevnext/common/image.hpp"
#include "bevnext/depth_crf/depth_crf.hpp"
#include "bevnext/nn/tensor.hpp"

namespace bevnext::fixture
{

/// Image split into a left and a right region of distinct flat colours with
/// small per-pixel noise, plus depth logits that share a per-region profile
/// perturbed independently at every pixel.
struct TwoRegion
{
  RgbImage image;
  nn::Tensor logits;  // [K, H', W']
  std::size_t stride = 4;
  std::vector<int> region;  // per feature pixel: 0 left, 1 right
};

TwoRegion two_region(std::uint64_t seed, std::size_t bins = 8);

/// Mean L1 distance between distributions of distinct same-region pixel pairs.
double intra_region_spread(const depth_crf::DepthVolume & q, const std::vector<int> & region);

}  // namespace bevnext::fixture
