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
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bevnext/depth_crf/depth_crf.hpp"
#include "bevnext/nn/kernels.hpp"
#include "bevnext/nn/tensor.hpp"
#include "bevnext/view_transform/camera.hpp"
#include "bevnext/view_transform/view_transform.hpp"

namespace bevnext::object_decoder
{

inline constexpr std::size_t kRoiSide = 7;
inline constexpr std::size_t kRoiCells = kRoiSide * kRoiSide;
inline constexpr std::size_t kRoiHalf = kRoiSide / 2;

// ---------------------------------------------------------------------------
// Proposal stage

/// sigmoid(conv2d(bev)) with a 3x3, padding 1 kernel. Values are clamped into
/// the open interval (0, 1) so saturated logits never reach exactly 0 or 1.
nn::Tensor compute_heatmap(const nn::Tensor & bev, const nn::ConvSpec & spec);

struct Center
{
  std::size_t x = 0;  // column
  std::size_t y = 0;  // row
  std::size_t cls = 0;
  float score = 0.0f;
};

/// Cells whose best class score is strictly greater than tau (compared in
/// float). Ordered by descending score, then row, then column; truncated to
/// top_n when given.
std::vector<Center> select_centers(
  const nn::Tensor & heatmap, double tau, std::optional<std::size_t> top_n = std::nullopt);

struct Roi
{
  Center center;
  nn::Tensor patch;  // [C, 7, 7], zero outside the grid
  std::array<bool, kRoiCells> refined{};
};

/// ROI patches plus the learned per-position queries [49, C] shared by all ROIs.
struct RoiSet
{
  std::vector<Roi> rois;
  nn::Tensor queries;
};

RoiSet expand_roi(const nn::Tensor & bev, std::span<const Center> centers, const nn::Tensor & queries);

// ---------------------------------------------------------------------------
// Perspective refinement

struct ProjectedRef
{
  double u = 0.0;
  double v = 0.0;
  bool valid = false;
};

/// Reference points for every ROI cell lifted to each height and projected
/// into every camera. Layout: points [roi][cell][height],
/// projections [roi][cell][height][camera].
struct RefPointSet
{
  std::size_t rois = 0;
  std::size_t heights = 0;
  std::size_t cameras = 0;
  std::vector<Eigen::Vector3d> points;
  std::vector<ProjectedRef> projections;

  const Eigen::Vector3d & point(std::size_t roi, std::size_t cell, std::size_t h) const
  {
    return points[(roi * kRoiCells + cell) * heights + h];
  }
  const ProjectedRef & projection(std::size_t roi, std::size_t cell, std::size_t h, std::size_t cam) const
  {
    return projections[((roi * kRoiCells + cell) * heights + h) * cameras + cam];
  }
};

RefPointSet lift_references(
  const RoiSet & rois, const view_transform::BevSpec & spec, std::span<const double> heights,
  const view_transform::CameraRig & rig);

/// Per-pixel MLP over the depth distribution, returned as [C_img, H', W'].
nn::Tensor depth_embedding(const depth_crf::DepthVolume & depth, const nn::MlpSpec & mlp);

/// Deformable spatial cross-attention parameters. A query of width C yields
/// heights * samples 2-D offsets (feature-map pixels) and heights * samples
/// logits normalised per height. Values are projected from C_img to C.
struct AttnSpec
{
  std::size_t embed_width = 0;
  std::size_t feature_width = 0;
  std::size_t heights = 0;
  std::size_t samples = 0;
  nn::Tensor offset_weight;  // [heights * samples * 2, C]
  nn::Tensor offset_bias;    // [heights * samples * 2]
  nn::Tensor attn_weight;    // [heights * samples, C]
  nn::Tensor attn_bias;      // [heights * samples]
  nn::Tensor value_weight;   // [C, C_img]
  nn::Tensor value_bias;     // [C]
  nn::Tensor output_weight;  // [C, C]
  nn::Tensor output_bias;    // [C]

  void validate() const;
};

/// Sampling offsets and normalised attention weights of one query.
struct QueryPlan
{
  std::vector<double> offsets;  // [height][sample][x, y]
  std::vector<double> weights;  // [height][sample], each height sums to 1
};

QueryPlan plan_query(std::span<const float> query, const AttnSpec & spec);

/// Refines every ROI cell: query = patch feature + queries[cell]; for each
/// camera and valid height the feature map (plus embedding, when given) is
/// sampled bilinearly around the projected reference point, weighted, value
/// projected and summed over cameras and heights. The output projection of
/// that sum is added to the cell feature. Cells without a valid reference
/// pass through with refined = false. embeddings is either empty or holds
/// one map per camera with the same dims as features.
RoiSet spatial_cross_attention(
  const RoiSet & rois, const RefPointSet & refs, std::span<const nn::Tensor> features,
  std::span<const nn::Tensor> embeddings, std::size_t stride, const AttnSpec & spec);

// ---------------------------------------------------------------------------
// Attribute regression

struct HeadBranch
{
  nn::ConvSpec hidden;  // 3x3, padding 1, ReLU
  nn::ConvSpec out;     // 1x1
};

/// Centre-based heads: a shared 3x3 conv followed by one branch per
/// attribute, evaluated at the ROI centre.
struct RegressionHeads
{
  nn::ConvSpec shared;
  HeadBranch offset;    // 2: sub-cell (x, y), tanh-scaled to +-0.5 cell
  HeadBranch size;      // 3: log (l, w, h)
  HeadBranch height;    // 1: ego z of the box centre
  HeadBranch rotation;  // 2: (sin, cos)
  HeadBranch velocity;  // 2: (vx, vy) m/s

  void validate(std::size_t channels) const;
};

struct Detection
{
  std::size_t cls = 0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double yaw = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  float score = 0.0f;
};

/// atan2(sin, cos) mapped into (-pi, pi]; (0, 0) decodes to 0.
double decode_yaw(double sin_value, double cos_value);

/// exp of the raw output, with the raw value clamped to +-30 so the result
/// stays strictly positive and finite.
double decode_size(double raw);

std::vector<Detection> regress(
  const RoiSet & rois, const RegressionHeads & heads, const view_transform::BevSpec & spec);

/// One detection per line: class x y z l w h yaw vx vy score.
void write_detections(std::ostream & out, std::span<const Detection> detections);
std::vector<Detection> read_detections(std::istream & in);

}  // namespace bevnext::object_decoder
