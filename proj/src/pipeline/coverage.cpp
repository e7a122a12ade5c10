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

#include "bevnext/pipeline/coverage.hpp"

#include <cmath>
#include <limits>

#include "bevnext/common/error.hpp"

namespace bevnext::pipeline
{

DepthLabels project_depth_labels(
  std::span<const Eigen::Vector3d> points, const view_transform::CameraModel & camera, std::size_t feat_height,
  std::size_t feat_width, std::size_t stride, const depth_crf::DepthBins & bins)
{
  camera.validate();
  bins.validate();
  if (feat_height == 0 || feat_width == 0 || stride == 0) {
    throw ShapeError("project_depth_labels: feature dims and stride must be positive");
  }
  DepthLabels out;
  out.height = feat_height;
  out.width = feat_width;
  out.labels.assign(feat_height * feat_width, -1);
  out.depth.assign(feat_height * feat_width, std::numeric_limits<double>::infinity());

  const double n = static_cast<double>(stride);
  for (const auto & p : points) {
    const auto proj = camera.project(p);
    if (!camera.sees(proj)) {
      continue;
    }
    // Cell membership nests across strides: floor(floor(a / 8) / 2) == floor(a / 16).
    const auto col = static_cast<std::size_t>(std::floor((proj.u + 0.5) / n));
    const auto row = static_cast<std::size_t>(std::floor((proj.v + 0.5) / n));
    if (col >= feat_width || row >= feat_height) {
      continue;
    }
    const std::size_t cell = row * feat_width + col;
    if (proj.depth < out.depth[cell]) {
      out.depth[cell] = proj.depth;
      out.labels[cell] = static_cast<std::int32_t>(bins.nearest(proj.depth));
    }
  }
  std::size_t labelled = 0;
  for (auto l : out.labels) {
    labelled += l >= 0 ? 1 : 0;
  }
  out.coverage = static_cast<double>(labelled) / static_cast<double>(out.labels.size());
  return out;
}

}  // namespace bevnext::pipeline
