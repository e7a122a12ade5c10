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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bevnext/depth_crf/depth_bins.hpp"
#include "bevnext/depth_crf/depth_crf.hpp"
#include "bevnext/res2fusion/res2fusion.hpp"
#include "bevnext/view_transform/camera.hpp"
#include "bevnext/view_transform/view_transform.hpp"

namespace bevnext::pipeline
{

/// Seconds between frames (2 Hz).
inline constexpr double kFrameInterval = 0.5;

/// Everything a run needs besides weights and images. Parsed from a text
/// file with one `dotted.key = value` per line; '#' starts a comment.
struct SceneConfig
{
  // scene.*
  std::uint64_t seed = 7;
  std::size_t frames = 9;
  std::size_t objects_min = 2;
  std::size_t objects_max = 6;
  std::size_t image_height = 64;
  std::size_t image_width = 176;
  std::size_t stride = 0;  // 0 selects 8 for images up to 256 rows, 16 above

  // camera.*
  std::size_t cameras = 6;
  double camera_fov_deg = 70.0;
  double camera_pitch_deg = 10.0;
  double camera_height = 1.6;
  double camera_mount_radius = 0.5;

  // depth.*
  std::size_t depth_bins = 8;
  double depth_min = 1.0;
  double depth_max = 9.0;

  // bev.*
  std::size_t bev_grid = 32;
  double bev_half_extent = 8.0;

  // crf.*
  double crf_appearance_weight = 1.0;
  double crf_appearance_theta = 0.1;
  double crf_spatial_weight = 0.3;
  double crf_spatial_theta = 3.0;
  std::size_t crf_iterations = 5;
  std::size_t crf_window = 0;

  // model.*
  std::uint64_t model_seed = 1234;
  std::size_t image_channels = 16;
  std::size_t bev_channels = 16;
  std::size_t fusion_window = 3;
  std::size_t fusion_reduced_channels = 16;
  std::size_t fusion_out_channels = 16;
  res2fusion::CascadeInput cascade_input = res2fusion::CascadeInput::kConvolved;
  std::size_t head_channels = 16;
  std::size_t depth_mlp_hidden = 16;

  // decoder.*
  std::size_t classes = 3;
  double threshold = 0.1;
  std::size_t top_n = 32;
  std::vector<double> ref_heights{-1.0, 1.0 / 3.0, 5.0 / 3.0, 3.0};
  std::size_t attn_samples = 2;
  bool depth_embedding = true;

  // runtime.*
  int threads = 1;

  std::size_t feature_stride() const;
  std::size_t feature_height() const { return image_height / feature_stride(); }
  std::size_t feature_width() const { return image_width / feature_stride(); }
  depth_crf::DepthBins bins() const;
  depth_crf::CrfParams crf() const;
  view_transform::BevSpec bev() const;
  view_transform::CameraRig rig() const;

  /// Throws ConfigError naming the first inconsistency.
  void validate() const;
};

SceneConfig parse_config(std::istream & in);
SceneConfig load_config(const std::filesystem::path & path);

/// Serialises every key; parse_config(write) reproduces the config exactly.
std::string config_to_string(const SceneConfig & cfg);

}  // namespace bevnext::pipeline
