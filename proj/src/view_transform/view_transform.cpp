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

#include "bevnext/view_transform/view_transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"

namespace bevnext::view_transform
{

BevSpec BevSpec::from_extent(std::size_t grid, double half_extent)
{
  BevSpec spec{grid, 2.0 * half_extent / static_cast<double>(grid), half_extent};
  spec.validate();
  return spec;
}

void BevSpec::validate() const
{
  if (grid < 8) {
    throw ConfigError("bev: grid must be at least 8 cells, got " + std::to_string(grid));
  }
  if (!(half_extent > 0.0) || !(cell_size > 0.0)) {
    throw ConfigError("bev: extent and cell size must be positive");
  }
  if (std::abs(static_cast<double>(grid) * cell_size - 2.0 * half_extent) > 1e-9 * half_extent) {
    throw ConfigError("bev: grid * cell_size must equal 2 * half_extent");
  }
}

std::optional<std::uint32_t> BevSpec::cell_of(double x, double y) const
{
  const double fx = std::floor((x + half_extent) / cell_size);
  const double fy = std::floor((y + half_extent) / cell_size);
  const auto g = static_cast<double>(grid);
  if (!(fx >= 0.0 && fx < g && fy >= 0.0 && fy < g)) {
    return std::nullopt;
  }
  return static_cast<std::uint32_t>(static_cast<std::size_t>(fy) * grid + static_cast<std::size_t>(fx));
}

Eigen::Vector2d BevSpec::cell_center(std::ptrdiff_t col, std::ptrdiff_t row) const
{
  return {
    -half_extent + (static_cast<double>(col) + 0.5) * cell_size,
    -half_extent + (static_cast<double>(row) + 0.5) * cell_size};
}

FrustumGrid build_frustum(
  const CameraModel & camera, std::size_t feat_height, std::size_t feat_width, std::size_t stride,
  const depth_crf::DepthBins & bins)
{
  camera.validate();
  bins.validate();
  FrustumGrid grid{feat_height, feat_width, bins.count(), {}};
  grid.points.reserve(feat_height * feat_width * bins.count());
  for (std::size_t y = 0; y < feat_height; ++y) {
    const double v = feature_to_image(static_cast<double>(y), stride);
    for (std::size_t x = 0; x < feat_width; ++x) {
      const double u = feature_to_image(static_cast<double>(x), stride);
      for (double depth : bins.centers) {
        grid.points.push_back(camera.unproject(u, v, depth));
      }
    }
  }
  return grid;
}

nn::Tensor lift(const nn::Tensor & features, const depth_crf::DepthVolume & depth)
{
  if (features.rank() != 3) {
    throw ShapeError("lift: features must be [C, H', W'], got " + nn::dims_to_string(features.dims()));
  }
  if (features.dim(1) != depth.height || features.dim(2) != depth.width) {
    throw ShapeError(
      "lift: feature map " + std::to_string(features.dim(1)) + "x" + std::to_string(features.dim(2)) +
      " vs depth volume " + std::to_string(depth.height) + "x" + std::to_string(depth.width));
  }
  const std::size_t c = features.dim(0);
  const std::size_t h = depth.height;
  const std::size_t w = depth.width;
  const std::size_t k = depth.bins;
  nn::Tensor out({c, h, w, k});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double f = features.at(ch, y, x);
        const auto p = depth.pixel(y * w + x);
        for (std::size_t b = 0; b < k; ++b) {
          out.at(ch, y, x, b) = static_cast<float>(f * p[b]);
        }
      }
    }
  }
  return out;
}

PoolIndex precompute_pool_index(std::span<const FrustumGrid> frusta, const BevSpec & spec)
{
  spec.validate();
  if (frusta.empty()) {
    throw ShapeError("precompute_pool_index: no cameras");
  }
  PoolIndex index;
  index.cameras = frusta.size();
  index.height = frusta.front().height;
  index.width = frusta.front().width;
  index.bins = frusta.front().bins;
  index.grid = spec.grid;

  struct Entry
  {
    std::uint32_t cell, camera, pixel, bin;
  };
  std::vector<Entry> entries;
  for (std::size_t cam = 0; cam < frusta.size(); ++cam) {
    const auto & f = frusta[cam];
    if (f.height != index.height || f.width != index.width || f.bins != index.bins) {
      throw ShapeError("precompute_pool_index: camera " + std::to_string(cam) + " frustum dims differ");
    }
    for (std::size_t pix = 0; pix < f.height * f.width; ++pix) {
      for (std::size_t b = 0; b < f.bins; ++b) {
        const auto & pt = f.points[pix * f.bins + b];
        if (const auto cell = spec.cell_of(pt.x(), pt.y())) {
          entries.push_back(
            {*cell, static_cast<std::uint32_t>(cam), static_cast<std::uint32_t>(pix), static_cast<std::uint32_t>(b)});
        }
      }
    }
  }
  // Generation order is already (camera, pixel, bin); a stable sort by cell
  // yields the full (cell, camera, pixel, bin) ordering.
  std::stable_sort(entries.begin(), entries.end(), [](const Entry & a, const Entry & b) { return a.cell < b.cell; });

  index.entry_camera.reserve(entries.size());
  index.entry_pixel.reserve(entries.size());
  index.entry_bin.reserve(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    if (e == 0 || entries[e].cell != entries[e - 1].cell) {
      index.interval_cell.push_back(entries[e].cell);
      index.interval_start.push_back(static_cast<std::uint32_t>(e));
      index.interval_length.push_back(0);
    }
    ++index.interval_length.back();
    index.entry_camera.push_back(entries[e].camera);
    index.entry_pixel.push_back(entries[e].pixel);
    index.entry_bin.push_back(entries[e].bin);
  }
  return index;
}

nn::Tensor pool(std::span<const nn::Tensor> frustum_features, const PoolIndex & index, const BevSpec & spec)
{
  if (frustum_features.size() != index.cameras) {
    throw ShapeError(
      "pool: " + std::to_string(frustum_features.size()) + " cameras supplied, index built for " +
      std::to_string(index.cameras));
  }
  if (spec.grid != index.grid) {
    throw ShapeError("pool: stale index (grid size differs from BEV spec)");
  }
  const std::size_t channels = frustum_features.front().dims().empty() ? 0 : frustum_features.front().dim(0);
  const std::vector<std::size_t> want{channels, index.height, index.width, index.bins};
  for (std::size_t cam = 0; cam < frustum_features.size(); ++cam) {
    if (frustum_features[cam].dims() != want) {
      throw ShapeError(
        "pool: stale index, camera " + std::to_string(cam) + " features are " +
        nn::dims_to_string(frustum_features[cam].dims()) + ", index expects " + nn::dims_to_string(want));
    }
  }

  const std::size_t g = spec.grid;
  const std::size_t plane = index.height * index.width * index.bins;
  nn::Tensor bev({channels, g, g});
  parallel_for(0, index.interval_cell.size(), [&](std::size_t iv) {
    const std::size_t cell = index.interval_cell[iv];
    const std::size_t start = index.interval_start[iv];
    const std::size_t end = start + index.interval_length[iv];
    for (std::size_t c = 0; c < channels; ++c) {
      double acc = 0.0;
      for (std::size_t e = start; e < end; ++e) {
        const auto & f = frustum_features[index.entry_camera[e]];
        acc += f[c * plane + static_cast<std::size_t>(index.entry_pixel[e]) * index.bins + index.entry_bin[e]];
      }
      bev[c * g * g + cell] = static_cast<float>(acc);
    }
  });
  return bev;
}

nn::Container pool_index_to_container(const PoolIndex & index)
{
  auto arr = [](const std::vector<std::uint32_t> & v) {
    // zero-length arrays are stored as a single padding element
    return nn::IndexArray{{std::max<std::size_t>(1, v.size())}, v.empty() ? std::vector<std::uint32_t>{0} : v};
  };
  nn::Container c;
  c["pool.meta"] = nn::IndexArray{
    {7},
    {static_cast<std::uint32_t>(index.cameras), static_cast<std::uint32_t>(index.height),
     static_cast<std::uint32_t>(index.width), static_cast<std::uint32_t>(index.bins),
     static_cast<std::uint32_t>(index.grid), static_cast<std::uint32_t>(index.entries()),
     static_cast<std::uint32_t>(index.interval_cell.size())}};
  c["pool.entry.camera"] = arr(index.entry_camera);
  c["pool.entry.pixel"] = arr(index.entry_pixel);
  c["pool.entry.bin"] = arr(index.entry_bin);
  c["pool.interval.cell"] = arr(index.interval_cell);
  c["pool.interval.start"] = arr(index.interval_start);
  c["pool.interval.length"] = arr(index.interval_length);
  return c;
}

PoolIndex pool_index_from_container(const nn::Container & container)
{
  auto get = [&](const std::string & name) -> const nn::IndexArray & {
    const auto it = container.find(name);
    if (it == container.end() || !std::holds_alternative<nn::IndexArray>(it->second)) {
      throw FormatError("pool index: missing u32 entry \"" + name + "\"");
    }
    return std::get<nn::IndexArray>(it->second);
  };
  const auto & meta = get("pool.meta").data;
  if (meta.size() != 7) {
    throw FormatError("pool index: pool.meta must hold 7 values");
  }
  PoolIndex index;
  index.cameras = meta[0];
  index.height = meta[1];
  index.width = meta[2];
  index.bins = meta[3];
  index.grid = meta[4];
  const std::size_t entries = meta[5];
  const std::size_t intervals = meta[6];
  auto take = [&](const std::string & name, std::size_t n) {
    const auto & a = get(name).data;
    if (a.size() < n) {
      throw FormatError("pool index: \"" + name + "\" shorter than declared");
    }
    return std::vector<std::uint32_t>(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
  };
  index.entry_camera = take("pool.entry.camera", entries);
  index.entry_pixel = take("pool.entry.pixel", entries);
  index.entry_bin = take("pool.entry.bin", entries);
  index.interval_cell = take("pool.interval.cell", intervals);
  index.interval_start = take("pool.interval.start", intervals);
  index.interval_length = take("pool.interval.length", intervals);
  return index;
}

}  // namespace bevnext::view_transform
