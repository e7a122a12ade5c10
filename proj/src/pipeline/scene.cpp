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

#include "bevnext/pipeline/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"
#include "bevnext/common/rng.hpp"
#include "bevnext/nn/tensor_io.hpp"

namespace bevnext::pipeline
{
namespace
{

constexpr double kSensorHeight = 1.8;
constexpr double kMaxRange = 40.0;
constexpr double kKeepOut = 2.5;  // no box centre this close to the ego origin
constexpr double kMargin = 0.5;

struct ClassPrior
{
  double len[2];
  double wid[2];
  double hgt[2];
  double speed;
};

constexpr ClassPrior kPriors[] = {
  {{3.9, 4.6}, {1.6, 1.9}, {1.4, 1.7}, 3.0},  // car
  {{0.5, 0.8}, {0.5, 0.8}, {1.6, 1.9}, 1.0},  // pedestrian
  {{1.6, 1.9}, {0.5, 0.8}, {1.5, 1.8}, 2.0},  // cyclist
};

constexpr std::array<float, 3> kPalette[] = {
  {0.90f, 0.15f, 0.10f}, {0.10f, 0.75f, 0.20f}, {0.15f, 0.25f, 0.90f},
  {0.95f, 0.85f, 0.10f}, {0.85f, 0.20f, 0.80f}, {0.10f, 0.80f, 0.85f},
};

struct Hit
{
  double t = std::numeric_limits<double>::infinity();
  std::size_t box = 0;
  int axis = -1;  // entering face: 0 = +-x (length), 1 = +-y (width), 2 = top/bottom
};

// Slab test in the box frame.
bool intersect_box(const GtBox & box, const Eigen::Vector3d & origin, const Eigen::Vector3d & dir, double & t_out, int & axis_out)
{
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Eigen::Vector3d rel = origin - box.center;
  const Eigen::Vector3d o(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y(), rel.z());
  const Eigen::Vector3d d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  const Eigen::Vector3d half = box.size / 2.0;

  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (std::abs(o[a]) > half[a]) {
        return false;
      }
      continue;
    }
    double t0 = (-half[a] - o[a]) / d[a];
    double t1 = (half[a] - o[a]) / d[a];
    if (t0 > t1) {
      std::swap(t0, t1);
    }
    if (t0 > t_near) {
      t_near = t0;
      axis = a;
    }
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_near <= 1e-9) {
    return false;
  }
  t_out = t_near;
  axis_out = axis;
  return true;
}

Hit cast(const std::vector<GtBox> & boxes, const Eigen::Vector3d & origin, const Eigen::Vector3d & dir)
{
  Hit hit;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    double t = 0.0;
    int axis = -1;
    if (intersect_box(boxes[b], origin, dir, t, axis) && t < hit.t) {
      hit = {t, b, axis};
    }
  }
  return hit;
}

std::vector<GtBox> boxes_at(const std::vector<GtBox> & initial, std::size_t frame)
{
  const double t = static_cast<double>(frame) * kFrameInterval;
  std::vector<GtBox> out = initial;
  for (auto & b : out) {
    b.center.x() += b.velocity.x() * t;
    b.center.y() += b.velocity.y() * t;
  }
  return out;
}

std::vector<GtBox> sample_objects(const SceneConfig & cfg, Rng & rng)
{
  const std::size_t count = cfg.objects_min + rng.uniform_index(cfg.objects_max - cfg.objects_min + 1);
  const double limit = cfg.bev_half_extent - kMargin;
  std::vector<GtBox> boxes;
  for (std::size_t i = 0; i < count; ++i) {
    bool placed = false;
    GtBox b;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      b.cls = rng.uniform_index(3);
      const auto & prior = kPriors[b.cls];
      b.size = {rng.uniform(prior.len[0], prior.len[1]), rng.uniform(prior.wid[0], prior.wid[1]),
                rng.uniform(prior.hgt[0], prior.hgt[1])};
      b.yaw = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double speed = rng.uniform(0.0, prior.speed);
      b.velocity = {speed * std::cos(b.yaw), speed * std::sin(b.yaw)};
      b.center = {rng.uniform(-limit, limit), rng.uniform(-limit, limit), b.size.z() / 2.0};
      b.color = kPalette[rng.uniform_index(std::size(kPalette))];

      placed = true;
      for (std::size_t f = 0; f < cfg.frames; ++f) {
        const double t = static_cast<double>(f) * kFrameInterval;
        const Eigen::Vector2d c = b.center.head<2>() + b.velocity * t;
        if (std::abs(c.x()) > limit || std::abs(c.y()) > limit || c.norm() < kKeepOut) {
          placed = false;
        }
        for (const auto & other : boxes) {
          const Eigen::Vector2d oc = other.center.head<2>() + other.velocity * t;
          if ((oc - c).norm() < 0.5 * (b.size.x() + other.size.x())) {
            placed = false;
          }
        }
      }
    }
    if (!placed) {
      throw ConfigError(fmt::format("scene: could not place object {} of {} inside the BEV extent", i + 1, count));
    }
    boxes.push_back(b);
  }
  return boxes;
}

float background(const Eigen::Vector3d & origin, const Eigen::Vector3d & dir)
{
  if (dir.z() < -1e-9) {
    const double t = -origin.z() / dir.z();
    const double dist = (origin + t * dir).head<2>().norm();
    return static_cast<float>(0.25 + 0.35 * std::exp(-dist / 15.0));
  }
  const double elevation = dir.z() / dir.norm();
  return static_cast<float>(0.65 + 0.3 * elevation);
}

}  // namespace

RgbImage render_view(const view_transform::CameraModel & camera, const std::vector<GtBox> & boxes)
{
  RgbImage img(camera.image_height, camera.image_width);
  const Eigen::Vector3d origin = camera.translation;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const Eigen::Vector3d ray(
        (static_cast<double>(x) - camera.cx) / camera.fx, (static_cast<double>(y) - camera.cy) / camera.fy, 1.0);
      const Eigen::Vector3d dir = camera.rotation * ray;
      const Hit hit = cast(boxes, origin, dir);
      if (hit.axis >= 0) {
        const float shade = hit.axis == 2 ? 1.0f : (hit.axis == 0 ? 0.85f : 0.65f);
        for (std::size_t c = 0; c < 3; ++c) {
          img.at(y, x, c) = boxes[hit.box].color[c] * shade;
        }
      } else {
        const float g = background(origin, dir);
        for (std::size_t c = 0; c < 3; ++c) {
          img.at(y, x, c) = g;
        }
      }
    }
  }
  quantize_to_8bit(img);
  return img;
}

std::vector<Eigen::Vector3d> scan_points(const std::vector<GtBox> & boxes)
{
  const Eigen::Vector3d origin(0.0, 0.0, kSensorHeight);
  std::vector<Eigen::Vector3d> points;
  for (int beam = 0; beam < 16; ++beam) {
    const double elev = (-25.0 + 27.0 * beam / 15.0) * std::numbers::pi / 180.0;
    for (int step = 0; step < 360; ++step) {
      const double az = step * std::numbers::pi / 180.0;
      const Eigen::Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
      double t = cast(boxes, origin, dir).t;
      if (dir.z() < 0.0) {
        t = std::min(t, -origin.z() / dir.z());
      }
      if (t > kMaxRange) {
        continue;
      }
      const Eigen::Vector3d p = origin + t * dir;
      points.emplace_back(static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()));
    }
  }
  return points;
}

SyntheticScene gen_scene(const SceneConfig & cfg)
{
  cfg.validate();
  Rng rng(cfg.seed);
  const auto initial = sample_objects(cfg, rng);
  const auto rig = cfg.rig();

  SyntheticScene scene;
  scene.frames.resize(cfg.frames);
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    auto & frame = scene.frames[f];
    frame.boxes = boxes_at(initial, f);
    frame.images.resize(rig.size());
    parallel_for(0, rig.size(), [&](std::size_t c) { frame.images[c] = render_view(rig[c], frame.boxes); });
    frame.points = scan_points(frame.boxes);
  }
  return scene;
}

namespace
{

std::filesystem::path frame_dir(const std::filesystem::path & dir, std::size_t f)
{
  return dir / fmt::format("frame_{:03d}", f);
}

}  // namespace

void save_scene(const SyntheticScene & scene, const SceneConfig & cfg, const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir);
  {
    std::ofstream meta(dir / "scene.cfg");
    meta << config_to_string(cfg);
  }
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const auto & frame = scene.frames[f];
    const auto fdir = frame_dir(dir, f);
    std::filesystem::create_directories(fdir);
    for (std::size_t c = 0; c < frame.images.size(); ++c) {
      write_ppm(fdir / fmt::format("cam_{}.ppm", c), frame.images[c]);
    }
    std::ofstream boxes(fdir / "boxes.txt");
    for (const auto & b : frame.boxes) {
      boxes << fmt::format(
        "{} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {} {} {}\n", b.cls,
        b.center.x(), b.center.y(), b.center.z(), b.size.x(), b.size.y(), b.size.z(), b.yaw, b.velocity.x(),
        b.velocity.y(), b.color[0], b.color[1], b.color[2]);
    }
    if (!boxes) {
      throw Error("scene: failed to write " + (fdir / "boxes.txt").string());
    }
    nn::Container points;
    if (!frame.points.empty()) {
      nn::Tensor t({frame.points.size(), 3});
      for (std::size_t i = 0; i < frame.points.size(); ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
          t.at(i, a) = static_cast<float>(frame.points[i][a]);
        }
      }
      points.emplace("points", std::move(t));
    }
    nn::save_container(fdir / "points.bvnx", points);
  }
}

SyntheticScene load_scene(const std::filesystem::path & dir, const SceneConfig & cfg)
{
  SyntheticScene scene;
  scene.frames.resize(cfg.frames);
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    auto & frame = scene.frames[f];
    const auto fdir = frame_dir(dir, f);
    if (!std::filesystem::is_directory(fdir)) {
      throw ConfigError(fmt::format("scene: {} is missing; the config asks for {} frames", fdir.string(), cfg.frames));
    }
    for (std::size_t c = 0; c < cfg.cameras; ++c) {
      auto img = read_ppm(fdir / fmt::format("cam_{}.ppm", c));
      if (img.height != cfg.image_height || img.width != cfg.image_width) {
        throw ShapeError(fmt::format(
          "scene: frame {} camera {} is {}x{}, config expects {}x{}", f, c, img.height, img.width, cfg.image_height,
          cfg.image_width));
      }
      frame.images.push_back(std::move(img));
    }
    std::ifstream boxes(fdir / "boxes.txt");
    if (!boxes) {
      throw FormatError("scene: cannot open " + (fdir / "boxes.txt").string());
    }
    GtBox b;
    while (boxes >> b.cls >> b.center.x() >> b.center.y() >> b.center.z() >> b.size.x() >> b.size.y() >>
           b.size.z() >> b.yaw >> b.velocity.x() >> b.velocity.y() >> b.color[0] >> b.color[1] >> b.color[2]) {
      frame.boxes.push_back(b);
    }
    if (!boxes.eof()) {
      throw FormatError("scene: malformed " + (fdir / "boxes.txt").string());
    }
    const auto points = nn::load_container(fdir / "points.bvnx");
    if (auto it = points.find("points"); it != points.end()) {
      const auto * t = std::get_if<nn::Tensor>(&it->second);
      if (t == nullptr || t->rank() != 2 || t->dim(1) != 3) {
        throw FormatError("scene: points entry must be an [N, 3] float tensor");
      }
      for (std::size_t i = 0; i < t->dim(0); ++i) {
        frame.points.emplace_back(t->at(i, 0), t->at(i, 1), t->at(i, 2));
      }
    }
  }
  return scene;
}

}  // namespace bevnext::pipeline
