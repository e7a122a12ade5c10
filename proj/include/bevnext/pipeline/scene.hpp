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
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "bevnext/common/image.hpp"
#include "bevnext/pipeline/config.hpp"

namespace bevnext::pipeline
{

enum class ObjectClass : std::size_t { kCar = 0, kPedestrian = 1, kCyclist = 2 };

struct GtBox
{
  std::size_t cls = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // ego metres, z at box mid-height
  Eigen::Vector3d size = Eigen::Vector3d::Ones();    // length, width, height
  double yaw = 0.0;
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  std::array<float, 3> color{1.0f, 0.0f, 0.0f};
};

struct SceneFrame
{
  std::vector<RgbImage> images;  // one per camera, 8-bit quantised
  std::vector<GtBox> boxes;
  std::vector<Eigen::Vector3d> points;  // range-sensor returns, ego frame, float precision
};

struct SyntheticScene
{
  std::vector<SceneFrame> frames;  // chronological, last = current
};

/// Flat-shaded boxes over a grey ground plane and sky. Object motion is
/// constant velocity; every box centre stays inside the BEV extent in every
/// frame. Deterministic per cfg.seed.
SyntheticScene gen_scene(const SceneConfig & cfg);

/// Renders one camera view of the given boxes.
RgbImage render_view(const view_transform::CameraModel & camera, const std::vector<GtBox> & boxes);

/// Casts a fixed 16-beam, 1 degree azimuth pattern from a sensor 1.8 m above the ego origin.
std::vector<Eigen::Vector3d> scan_points(const std::vector<GtBox> & boxes);

void save_scene(const SyntheticScene & scene, const SceneConfig & cfg, const std::filesystem::path & dir);
SyntheticScene load_scene(const std::filesystem::path & dir, const SceneConfig & cfg);

}  // namespace bevnext::pipeline
