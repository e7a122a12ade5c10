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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bevnext/depth_crf/depth_bins.hpp"
#include "bevnext/depth_crf/depth_crf.hpp"
#include "bevnext/nn/tensor.hpp"
#include "bevnext/nn/tensor_io.hpp"
#include "bevnext/view_transform/camera.hpp"

namespace bevnext::view_transform
{

/// Ego-frame 3-D point for every (feature pixel, depth bin) pair,
/// stored [y][x][bin].
struct FrustumGrid
{
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bins = 0;
  std::vector<Eigen::Vector3d> points;

  const Eigen::Vector3d & at(std::size_t y, std::size_t x, std::size_t k) const
  {
    return points[(y * width + x) * bins + k];
  }
};

/// Ego-centred square BEV raster. Row index follows ego y, column index ego x;
/// cell (row, col) covers [-L + col * cell, -L + (col + 1) * cell) in x.
struct BevSpec
{
  std::size_t grid = 32;
  double cell_size = 0.5;
  double half_extent = 8.0;

  static BevSpec from_extent(std::size_t grid, double half_extent);
  void validate() const;

  /// Flat cell id row * grid + col, or nullopt when (x, y) is outside the extent.
  std::optional<std::uint32_t> cell_of(double x, double y) const;

  /// Ego (x, y) of a cell centre. Works for indices outside the grid too.
  Eigen::Vector2d cell_center(std::ptrdiff_t col, std::ptrdiff_t row) const;
};

/// Pooling plan: frustum entries sorted by (cell, camera, pixel, bin) and one
/// contiguous interval per non-empty cell.
struct PoolIndex
{
  std::size_t cameras = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bins = 0;
  std::size_t grid = 0;

  std::vector<std::uint32_t> entry_camera;
  std::vector<std::uint32_t> entry_pixel;  // y * width + x
  std::vector<std::uint32_t> entry_bin;

  std::vector<std::uint32_t> interval_cell;
  std::vector<std::uint32_t> interval_start;
  std::vector<std::uint32_t> interval_length;

  std::size_t entries() const { return entry_camera.size(); }
};

FrustumGrid build_frustum(
  const CameraModel & camera, std::size_t feat_height, std::size_t feat_width, std::size_t stride,
  const depth_crf::DepthBins & bins);

/// Outer product features(c, y, x) * depth(y, x, k) as a [C, H', W', K] tensor.
nn::Tensor lift(const nn::Tensor & features, const depth_crf::DepthVolume & depth);

PoolIndex precompute_pool_index(std::span<const FrustumGrid> frusta, const BevSpec & spec);

/// Sums the lifted features of every entry into its cell, in index order.
/// Returns a [C, G, G] grid.
nn::Tensor pool(std::span<const nn::Tensor> frustum_features, const PoolIndex & index, const BevSpec & spec);

nn::Container pool_index_to_container(const PoolIndex & index);
PoolIndex pool_index_from_container(const nn::Container & container);

}  // namespace bevnext::view_transform
