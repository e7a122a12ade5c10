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

#include "bevnext/view_transform/camera.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "bevnext/common/error.hpp"

namespace bevnext::view_transform
{

void CameraModel::validate() const
{
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ConfigError("camera: focal lengths must be positive");
  }
  if (image_width == 0 || image_height == 0) {
    throw ConfigError("camera: image dims must be nonzero");
  }
  const double err = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(err <= 1e-6) || rotation.determinant() < 0.0) {
    throw ConfigError("camera: extrinsic rotation is not orthonormal within 1e-6");
  }
  if (!translation.allFinite()) {
    throw ConfigError("camera: extrinsic translation must be finite");
  }
}

Eigen::Vector3d CameraModel::unproject(double u, double v, double depth) const
{
  const Eigen::Vector3d cam((u - cx) / fx * depth, (v - cy) / fy * depth, depth);
  return rotation * cam + translation;
}

CameraModel::Projection CameraModel::project(const Eigen::Vector3d & ego) const
{
  const Eigen::Vector3d cam = rotation.transpose() * (ego - translation);
  Projection p;
  p.depth = cam.z();
  p.u = fx * cam.x() / cam.z() + cx;
  p.v = fy * cam.y() / cam.z() + cy;
  return p;
}

bool CameraModel::sees(const Projection & p) const
{
  return p.depth > 1e-9 && std::isfinite(p.u) && std::isfinite(p.v) && p.u >= 0.0 && p.v >= 0.0 &&
         p.u <= static_cast<double>(image_width - 1) && p.v <= static_cast<double>(image_height - 1);
}

CameraModel make_camera(
  double yaw, double pitch, const Eigen::Vector3d & position, double horizontal_fov, std::size_t image_width,
  std::size_t image_height)
{
  const Eigen::Vector3d forward(
    std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), -std::sin(pitch));
  const Eigen::Vector3d right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Eigen::Vector3d down = forward.cross(right);

  CameraModel cam;
  cam.rotation.col(0) = right;
  cam.rotation.col(1) = down;
  cam.rotation.col(2) = forward;
  cam.translation = position;
  cam.image_width = image_width;
  cam.image_height = image_height;
  cam.fx = (static_cast<double>(image_width) / 2.0) / std::tan(horizontal_fov / 2.0);
  cam.fy = cam.fx;
  cam.cx = (static_cast<double>(image_width) - 1.0) / 2.0;
  cam.cy = (static_cast<double>(image_height) - 1.0) / 2.0;
  cam.validate();
  return cam;
}

CameraRig make_surround_rig(
  std::size_t count, double mount_radius, double mount_height, double pitch, double horizontal_fov,
  std::size_t image_width, std::size_t image_height)
{
  CameraRig rig;
  rig.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double yaw = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    const Eigen::Vector3d position(mount_radius * std::cos(yaw), mount_radius * std::sin(yaw), mount_height);
    rig.push_back(make_camera(yaw, pitch, position, horizontal_fov, image_width, image_height));
  }
  return rig;
}

}  // namespace bevnext::view_transform
