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
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bevnext/depth_crf/depth_bins.hpp"
#include "bevnext/view_transform/camera.hpp"

namespace bevnext::pipeline
{

/// Sparse per-cell depth labels at feature resolution; -1 marks unlabelled cells.
struct DepthLabels
{
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::int32_t> labels;
  std::vector<double> depth;
  double coverage = 0.0;  // labelled cells / total cells
};

/// Projects range points into one camera. Each visible point lands in the
/// feature cell floor((u + 0.5) / stride); the nearest point per cell wins
/// and its depth is quantised to the nearest bin.
DepthLabels project_depth_labels(
  std::span<const Eigen::Vector3d> points, const view_transform::CameraModel & camera, std::size_t feat_height,
  std::size_t feat_width, std::size_t stride, const depth_crf::DepthBins & bins);

}  // namespace bevnext::pipeline
