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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bevnext/common/image.hpp"
#include "bevnext/common/rng.hpp"
#include "bevnext/depth_crf/depth_crf.hpp"
#include "bevnext/nn/kernels.hpp"
#include "bevnext/nn/tensor.hpp"
#include "bevnext/object_decoder/object_decoder.hpp"
#include "bevnext/view_transform/camera.hpp"
#include "bevnext/view_transform/view_transform.hpp"

// Reference implementations for tests. Each one is written from the defining
// formula with plain loops and shares no code with the library beyond the
// plain data structs.
namespace bevnext::oracle
{

// ---- random instances ----

nn::Tensor random_tensor(const std::vector<std::size_t> & dims, Rng & rng, double lo = -1.0, double hi = 1.0);
RgbImage random_image(std::size_t height, std::size_t width, Rng & rng);
nn::ConvSpec random_conv(
  std::size_t in, std::size_t out, std::size_t k, std::size_t stride, std::size_t pad, Rng & rng);
nn::MlpSpec random_mlp(const std::vector<std::size_t> & widths, const std::vector<nn::Activation> & acts, Rng & rng);
depth_crf::DepthVolume random_volume(std::size_t h, std::size_t w, std::size_t k, Rng & rng);

/// Cameras at random positions within 1 m of the origin, random yaw, pitch
/// in [-20, 20] degrees and horizontal fov in [50, 100] degrees.
view_transform::CameraRig random_rig(std::size_t count, std::size_t width, std::size_t height, Rng & rng);

// ---- nn ----

nn::Tensor conv2d(const nn::Tensor & chw, const nn::ConvSpec & spec);
nn::Tensor mlp(const nn::Tensor & rows, const nn::MlpSpec & spec);
std::vector<double> softmax(std::span<const double> x);

/// Four-neighbour interpolation; valid iff 0 <= x <= W-1 and 0 <= y <= H-1.
std::vector<double> bilinear(const nn::Tensor & chw, double x, double y, bool & valid);

// ---- depth CRF ----

std::vector<std::array<double, 3>> patch_colors(const RgbImage & image, std::size_t stride);

double affinity(
  const std::vector<std::array<double, 3>> & colors, std::size_t width, std::span<const depth_crf::CrfKernel> kernels,
  std::size_t i, std::size_t j);

/// Literal O(N^2 K^2) mean-field update with dense coupling.
depth_crf::DepthVolume mean_field_step(
  const depth_crf::DepthVolume & q, const std::vector<double> & unary,
  const std::vector<std::array<double, 3>> & colors, std::span<const depth_crf::CrfKernel> kernels,
  std::span<const double> centers);

double energy(
  std::span<const std::uint32_t> labels, const std::vector<double> & unary, std::size_t bins,
  const std::vector<std::array<double, 3>> & colors, std::size_t width,
  std::span<const depth_crf::CrfKernel> kernels, std::span<const double> centers);

// ---- view transform ----

struct Pixel
{
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};
Pixel project(const view_transform::CameraModel & cam, const Eigen::Vector3d & ego);

/// Scatter-add of every lifted value into the cell containing its frustum point.
nn::Tensor scatter_pool(
  std::span<const nn::Tensor> lifted, std::span<const view_transform::FrustumGrid> frusta,
  const view_transform::BevSpec & spec);

// ---- object decoder ----

/// Nested loop over (ROI, cell, camera, height, sample) implementing the
/// refinement with per-height softmax weights and a residual add.
object_decoder::RoiSet attention(
  const object_decoder::RoiSet & rois, const object_decoder::RefPointSet & refs, std::span<const nn::Tensor> maps,
  std::size_t stride, const object_decoder::AttnSpec & spec);

}  // namespace bevnext::oracle
