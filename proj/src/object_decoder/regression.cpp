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
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "bevnext/common/error.hpp"
#include "bevnext/object_decoder/object_decoder.hpp"

namespace bevnext::object_decoder
{

namespace
{

void check_branch(const HeadBranch & b, std::size_t hidden, std::size_t outputs, const char * name)
{
  b.hidden.validate();
  b.out.validate();
  if (b.hidden.in_channels != hidden || b.hidden.kernel_size != 3 || b.hidden.padding != 1 ||
      b.hidden.stride != 1 || b.out.kernel_size != 1 || b.out.in_channels != b.hidden.out_channels ||
      b.out.out_channels != outputs) {
    throw ShapeError(std::string("regression heads: branch ") + name + " has inconsistent shapes");
  }
}

// Runs one branch over the shared feature patch and returns its values at the centre cell.
std::vector<double> branch_at_center(const nn::Tensor & shared, const HeadBranch & branch)
{
  nn::Tensor hidden = nn::conv2d(shared, branch.hidden);
  nn::relu_inplace(hidden);
  const nn::Tensor out = nn::conv2d(hidden, branch.out);
  std::vector<double> values(out.dim(0));
  for (std::size_t c = 0; c < values.size(); ++c) {
    values[c] = out.at(c, kRoiHalf, kRoiHalf);
  }
  return values;
}

}  // namespace

void RegressionHeads::validate(std::size_t channels) const
{
  shared.validate();
  if (shared.in_channels != channels || shared.kernel_size != 3 || shared.padding != 1 || shared.stride != 1) {
    throw ShapeError("regression heads: shared conv must be 3x3/pad 1 over the BEV channels");
  }
  const std::size_t hidden = shared.out_channels;
  check_branch(offset, hidden, 2, "offset");
  check_branch(size, hidden, 3, "size");
  check_branch(height, hidden, 1, "height");
  check_branch(rotation, hidden, 2, "rotation");
  check_branch(velocity, hidden, 2, "velocity");
}

double decode_yaw(double sin_value, double cos_value)
{
  if (sin_value == 0.0 && cos_value == 0.0) {
    return 0.0;
  }
  const double yaw = std::atan2(sin_value, cos_value);
  return yaw <= -std::numbers::pi ? std::numbers::pi : yaw;
}

double decode_size(double raw) { return std::exp(std::clamp(raw, -30.0, 30.0)); }

std::vector<Detection> regress(
  const RoiSet & rois, const RegressionHeads & heads, const view_transform::BevSpec & spec)
{
  std::vector<Detection> detections;
  if (rois.rois.empty()) {
    return detections;
  }
  heads.validate(rois.rois.front().patch.dim(0));
  detections.reserve(rois.rois.size());
  for (const auto & roi : rois.rois) {
    nn::Tensor shared = nn::conv2d(roi.patch, heads.shared);
    nn::relu_inplace(shared);
    const auto offset = branch_at_center(shared, heads.offset);
    const auto size = branch_at_center(shared, heads.size);
    const auto height = branch_at_center(shared, heads.height);
    const auto rotation = branch_at_center(shared, heads.rotation);
    const auto velocity = branch_at_center(shared, heads.velocity);

    Detection d;
    d.cls = roi.center.cls;
    d.score = roi.center.score;
    d.offset_x = 0.5 * std::tanh(offset[0]);
    d.offset_y = 0.5 * std::tanh(offset[1]);
    const Eigen::Vector2d cell = spec.cell_center(
      static_cast<std::ptrdiff_t>(roi.center.x), static_cast<std::ptrdiff_t>(roi.center.y));
    d.x = cell.x() + d.offset_x * spec.cell_size;
    d.y = cell.y() + d.offset_y * spec.cell_size;
    d.z = height[0];
    d.length = decode_size(size[0]);
    d.width = decode_size(size[1]);
    d.height = decode_size(size[2]);
    d.yaw = decode_yaw(rotation[0], rotation[1]);
    d.vx = velocity[0];
    d.vy = velocity[1];
    detections.push_back(d);
  }
  return detections;
}

void write_detections(std::ostream & out, std::span<const Detection> detections)
{
  char line[512];
  for (const auto & d : detections) {
    std::snprintf(
      line, sizeof(line), "%zu %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n", d.cls, d.x, d.y, d.z,
      d.length, d.width, d.height, d.yaw, d.vx, d.vy, static_cast<double>(d.score));
    out << line;
  }
}

std::vector<Detection> read_detections(std::istream & in)
{
  std::vector<Detection> detections;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::istringstream fields(line);
    Detection d;
    double score = 0.0;
    if (!(fields >> d.cls >> d.x >> d.y >> d.z >> d.length >> d.width >> d.height >> d.yaw >> d.vx >> d.vy >> score)) {
      throw FormatError("detections: malformed line " + std::to_string(line_no));
    }
    d.score = static_cast<float>(score);
    detections.push_back(d);
  }
  return detections;
}

}  // namespace bevnext::object_decoder
