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
#include <cstdint>
#include <span>
#include <vector>

#include "bevnext/common/image.hpp"
#include "bevnext/depth_crf/depth_bins.hpp"
#include "bevnext/nn/tensor.hpp"

namespace bevnext::depth_crf
{

/// Per-pixel categorical distribution over depth bins for one camera.
/// Storage is pixel-major: probs[(y * width + x) * bins + k].
struct DepthVolume
{
  std::size_t camera = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bins = 0;
  std::vector<double> probs;

  DepthVolume() = default;
  DepthVolume(std::size_t cam, std::size_t h, std::size_t w, std::size_t k)
  : camera(cam), height(h), width(w), bins(k), probs(h * w * k, 0.0)
  {
  }

  std::size_t pixels() const { return height * width; }
  std::span<double> pixel(std::size_t i) { return {probs.data() + i * bins, bins}; }
  std::span<const double> pixel(std::size_t i) const { return {probs.data() + i * bins, bins}; }

  /// Throws ShapeError unless every distribution is nonnegative and sums to 1 within tol.
  void validate(double tol = 1e-6) const;
};

/// Mean RGB of each stride x stride image patch.
struct PatchColorMap
{
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::array<double, 3>> colors;
};

enum class KernelKind { kAppearance, kSpatial };

struct CrfKernel
{
  double weight = 1.0;
  double theta = 0.1;
  KernelKind kind = KernelKind::kAppearance;
};

inline constexpr std::size_t kMaxCrfIterations = 100;
inline constexpr std::size_t kMaxWindowRadius = 4096;

struct CrfParams
{
  std::vector<CrfKernel> kernels;
  std::size_t iterations = 5;
  std::size_t window_radius = 0;  // 0 couples every pixel pair

  /// One appearance kernel (w 1, theta 0.1 in normalised RGB) and one spatial
  /// kernel (w 0.3, theta 3 px), five iterations, dense coupling.
  static CrfParams defaults();
  void validate() const;
};

/// Label compatibility: entry (a, b) is the metric distance between bin centres.
struct CompatMatrix
{
  std::size_t bins = 0;
  std::vector<double> values;

  double operator()(std::size_t a, std::size_t b) const { return values[a * bins + b]; }
};

/// Per-pixel unary costs, pixel-major like DepthVolume.
struct UnaryPotentials
{
  std::size_t pixels = 0;
  std::size_t bins = 0;
  std::vector<double> cost;

  /// cost = -log(p + 1e-12)
  static UnaryPotentials from_probabilities(const DepthVolume & q);
  double operator()(std::size_t i, std::size_t label) const { return cost[i * bins + label]; }
};

/// Pairwise Gaussian affinities a(i, j) between feature-map pixels.
/// Appearance kernels compare patch colours, spatial kernels compare pixel
/// coordinates. When window_radius > 0 pairs further apart than the radius
/// (Chebyshev distance) have zero affinity. Neighbour lists exclude i itself
/// and are stored in ascending j.
class AffinityField
{
public:
  AffinityField(const PatchColorMap & colors, const CrfParams & params);

  std::size_t pixels() const { return height_ * width_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  /// Direct evaluation of the kernel sum; a(i, i) is the total kernel weight.
  double operator()(std::size_t i, std::size_t j) const;

  std::span<const std::uint32_t> neighbours(std::size_t i) const;
  std::span<const double> weights(std::size_t i) const;

private:
  double evaluate(std::size_t i, std::size_t j) const;

  std::size_t height_;
  std::size_t width_;
  std::size_t radius_;
  std::vector<std::array<double, 3>> colors_;
  std::vector<CrfKernel> kernels_;
  std::vector<std::size_t> row_start_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> values_;
};

struct LabelRaster
{
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint32_t> labels;
};

PatchColorMap patch_colors(const RgbImage & image, std::size_t stride);

CompatMatrix build_compat(const DepthBins & bins);

AffinityField pairwise_affinity(const PatchColorMap & colors, const CrfParams & params);

/// E = sum_i unary(x_i) + sum over ordered pairs i != j of a(i, j) * compat(x_i, x_j).
/// Each unordered pair therefore contributes twice.
double crf_energy(
  std::span<const std::uint32_t> labels, const UnaryPotentials & unary, const AffinityField & affinity,
  const CompatMatrix & compat);

/// One synchronous (Jacobi) mean-field update; every message reads q.
DepthVolume mean_field_step(
  const DepthVolume & q, const UnaryPotentials & unary, const AffinityField & affinity,
  const CompatMatrix & compat);

/// Softmax over [K, H', W'] logits into a DepthVolume.
DepthVolume softmax_depth(const nn::Tensor & logits, std::size_t camera = 0);

/// Softmax followed by params.iterations mean-field steps with unary
/// -log softmax(logits). The image must be H' * n by W' * n for some stride n.
DepthVolume modulate(
  const nn::Tensor & logits, const RgbImage & image, const DepthBins & bins, const CrfParams & params,
  std::size_t camera = 0);

/// Per-pixel argmax, ties resolved toward the lower bin.
LabelRaster map_labeling(const DepthVolume & q);

/// Colour-mapped argmax raster (bin 0 blue ... bin K-1 red).
RgbImage render_labels(const LabelRaster & labels, std::size_t bins);

}  // namespace bevnext::depth_crf
