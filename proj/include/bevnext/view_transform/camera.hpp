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
#include <vector>

#include <Eigen/Core>

namespace bevnext::view_transform
{

/// Pinhole camera. Camera axes: x right, y down, z forward. The extrinsic
/// maps camera coordinates into the ego frame (x forward, y left, z up):
/// p_ego = rotation * p_cam + translation. Image pixel centres sit on
/// integer coordinates.
struct CameraModel
{
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::size_t image_width = 0;
  std::size_t image_height = 0;

  /// Throws ConfigError on non-positive focal lengths, empty image dims or a
  /// rotation that is not orthonormal within 1e-6.
  void validate() const;

  /// Ego point of image location (u, v) at camera-frame depth z = depth.
  Eigen::Vector3d unproject(double u, double v, double depth) const;

  struct Projection
  {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;  // camera-frame z
  };
  Projection project(const Eigen::Vector3d & ego) const;

  /// True when depth > 0 and (u, v) lies on the image (pixel centres 0..W-1, 0..H-1).
  bool sees(const Projection & p) const;
};

using CameraRig = std::vector<CameraModel>;

/// Camera at the given ego position looking along yaw (counter-clockwise from
/// ego +x), tilted down by pitch. Horizontal field of view sets fx = fy.
CameraModel make_camera(
  double yaw, double pitch, const Eigen::Vector3d & position, double horizontal_fov, std::size_t image_width,
  std::size_t image_height);

/// count cameras at equal yaw spacing starting at yaw 0, each displaced
/// radially by mount_radius and raised by mount_height.
CameraRig make_surround_rig(
  std::size_t count, double mount_radius, double mount_height, double pitch, double horizontal_fov,
  std::size_t image_width, std::size_t image_height);

/// Image coordinate of the centre of feature cell index along one axis at stride n.
inline double feature_to_image(double cell, std::size_t stride)
{
  return cell * static_cast<double>(stride) + (static_cast<double>(stride) - 1.0) / 2.0;
}

/// Inverse of feature_to_image.
inline double image_to_feature(double pixel, std::size_t stride)
{
  return (pixel - (static_cast<double>(stride) - 1.0) / 2.0) / static_cast<double>(stride);
}

}  // namespace bevnext::view_transform
