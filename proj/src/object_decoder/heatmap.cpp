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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bevnext/common/error.hpp"
#include "bevnext/object_decoder/object_decoder.hpp"

namespace bevnext::object_decoder
{

nn::Tensor compute_heatmap(const nn::Tensor & bev, const nn::ConvSpec & spec)
{
  if (spec.kernel_size != 3 || spec.padding != 1 || spec.stride != 1) {
    throw ShapeError("compute_heatmap: expected a 3x3, stride 1, padding 1 kernel");
  }
  nn::Tensor heat = nn::conv2d(bev, spec);
  nn::sigmoid_inplace(heat);
  const float lo = std::numeric_limits<float>::min();
  const float hi = std::nextafter(1.0f, 0.0f);
  for (auto & v : heat.data()) {
    v = std::clamp(v, lo, hi);
  }
  return heat;
}

std::vector<Center> select_centers(const nn::Tensor & heatmap, double tau, std::optional<std::size_t> top_n)
{
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw ConfigError("select_centers: threshold must lie in [0, 1)");
  }
  if (heatmap.rank() != 3) {
    throw ShapeError("select_centers: heatmap must be [K, G, G], got " + nn::dims_to_string(heatmap.dims()));
  }
  const float threshold = static_cast<float>(tau);
  const std::size_t classes = heatmap.dim(0);
  const std::size_t rows = heatmap.dim(1);
  const std::size_t cols = heatmap.dim(2);
  std::vector<Center> centers;
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes; ++c) {
        if (heatmap.at(c, y, x) > heatmap.at(best, y, x)) {
          best = c;
        }
      }
      const float score = heatmap.at(best, y, x);
      if (score > threshold) {
        centers.push_back({x, y, best, score});
      }
    }
  }
  std::stable_sort(centers.begin(), centers.end(), [](const Center & a, const Center & b) {
    if (a.score != b.score) {
      return a.score > b.score;
    }
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  if (top_n && centers.size() > *top_n) {
    centers.resize(*top_n);
  }
  return centers;
}

RoiSet expand_roi(const nn::Tensor & bev, std::span<const Center> centers, const nn::Tensor & queries)
{
  if (bev.rank() != 3) {
    throw ShapeError("expand_roi: BEV must be [C, G, G], got " + nn::dims_to_string(bev.dims()));
  }
  const std::size_t channels = bev.dim(0);
  const std::size_t rows = bev.dim(1);
  const std::size_t cols = bev.dim(2);
  if (queries.dims() != std::vector<std::size_t>{kRoiCells, channels}) {
    throw ShapeError(
      "expand_roi: queries are " + nn::dims_to_string(queries.dims()) + ", expected [49x" +
      std::to_string(channels) + "]");
  }
  RoiSet set;
  set.queries = queries;
  set.rois.reserve(centers.size());
  for (const auto & center : centers) {
    if (center.x >= cols || center.y >= rows) {
      throw ShapeError("expand_roi: centre outside the BEV grid");
    }
    Roi roi;
    roi.center = center;
    roi.patch = nn::Tensor({channels, kRoiSide, kRoiSide});
    for (std::size_t dy = 0; dy < kRoiSide; ++dy) {
      const auto y = static_cast<std::ptrdiff_t>(center.y + dy) - static_cast<std::ptrdiff_t>(kRoiHalf);
      if (y < 0 || y >= static_cast<std::ptrdiff_t>(rows)) {
        continue;
      }
      for (std::size_t dx = 0; dx < kRoiSide; ++dx) {
        const auto x = static_cast<std::ptrdiff_t>(center.x + dx) - static_cast<std::ptrdiff_t>(kRoiHalf);
        if (x < 0 || x >= static_cast<std::ptrdiff_t>(cols)) {
          continue;
        }
        for (std::size_t c = 0; c < channels; ++c) {
          roi.patch.at(c, dy, dx) = bev.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        }
      }
    }
    set.rois.push_back(std::move(roi));
  }
  return set;
}

}  // namespace bevnext::object_decoder
