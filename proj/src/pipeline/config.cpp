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

#include "bevnext/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "bevnext/common/error.hpp"

namespace bevnext::pipeline
{
namespace
{

std::string trim(const std::string & s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(const std::string & key, const std::string & text)
{
  T value{};
  const auto * end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("{}: expected an integer, got '{}'", key, text));
  }
  return value;
}

double parse_double(const std::string & key, const std::string & text)
{
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw ConfigError(fmt::format("{}: expected a finite number, got '{}'", key, text));
  }
  return value;
}

bool parse_bool(const std::string & key, const std::string & text)
{
  if (text == "true" || text == "1") {
    return true;
  }
  if (text == "false" || text == "0") {
    return false;
  }
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, text));
}

std::string format_double(double v) { return fmt::format("{}", v); }

struct Field
{
  std::function<void(const std::string &)> set;
  std::function<std::string()> get;
};

// Ordered so that config_to_string output groups by section.
std::vector<std::pair<std::string, Field>> fields(SceneConfig & c)
{
  std::vector<std::pair<std::string, Field>> out;
  auto size = [&](const char * key, std::size_t & ref) {
    out.push_back({key, {[&ref, key](const std::string & s) { ref = parse_integer<std::size_t>(key, s); },
                         [&ref] { return std::to_string(ref); }}});
  };
  auto u64 = [&](const char * key, std::uint64_t & ref) {
    out.push_back({key, {[&ref, key](const std::string & s) { ref = parse_integer<std::uint64_t>(key, s); },
                         [&ref] { return std::to_string(ref); }}});
  };
  auto real = [&](const char * key, double & ref) {
    out.push_back({key, {[&ref, key](const std::string & s) { ref = parse_double(key, s); },
                         [&ref] { return format_double(ref); }}});
  };

  u64("scene.seed", c.seed);
  size("scene.frames", c.frames);
  size("scene.objects_min", c.objects_min);
  size("scene.objects_max", c.objects_max);
  size("scene.image_height", c.image_height);
  size("scene.image_width", c.image_width);
  size("scene.stride", c.stride);

  size("camera.count", c.cameras);
  real("camera.fov_deg", c.camera_fov_deg);
  real("camera.pitch_deg", c.camera_pitch_deg);
  real("camera.height", c.camera_height);
  real("camera.mount_radius", c.camera_mount_radius);

  size("depth.bins", c.depth_bins);
  real("depth.min", c.depth_min);
  real("depth.max", c.depth_max);

  size("bev.grid", c.bev_grid);
  real("bev.half_extent", c.bev_half_extent);

  real("crf.appearance_weight", c.crf_appearance_weight);
  real("crf.appearance_theta", c.crf_appearance_theta);
  real("crf.spatial_weight", c.crf_spatial_weight);
  real("crf.spatial_theta", c.crf_spatial_theta);
  size("crf.iterations", c.crf_iterations);
  size("crf.window", c.crf_window);

  u64("model.seed", c.model_seed);
  size("model.image_channels", c.image_channels);
  size("model.bev_channels", c.bev_channels);
  size("model.head_channels", c.head_channels);
  size("model.depth_mlp_hidden", c.depth_mlp_hidden);

  size("fusion.window", c.fusion_window);
  size("fusion.reduced_channels", c.fusion_reduced_channels);
  size("fusion.out_channels", c.fusion_out_channels);
  out.push_back(
    {"fusion.cascade_input",
     {[&c](const std::string & s) {
        if (s == "convolved") {
          c.cascade_input = res2fusion::CascadeInput::kConvolved;
        } else if (s == "reduced") {
          c.cascade_input = res2fusion::CascadeInput::kReduced;
        } else {
          throw ConfigError(fmt::format("fusion.cascade_input: expected convolved or reduced, got '{}'", s));
        }
      },
      [&c] {
        return std::string(c.cascade_input == res2fusion::CascadeInput::kConvolved ? "convolved" : "reduced");
      }}});

  size("decoder.classes", c.classes);
  real("decoder.threshold", c.threshold);
  size("decoder.top_n", c.top_n);
  size("decoder.samples", c.attn_samples);
  out.push_back(
    {"decoder.heights",
     {[&c](const std::string & s) {
        std::vector<double> hs;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
          hs.push_back(parse_double("decoder.heights", trim(item)));
        }
        c.ref_heights = std::move(hs);
      },
      [&c] {
        std::string s;
        for (std::size_t i = 0; i < c.ref_heights.size(); ++i) {
          s += (i ? "," : "") + format_double(c.ref_heights[i]);
        }
        return s;
      }}});
  out.push_back(
    {"decoder.depth_embedding",
     {[&c](const std::string & s) { c.depth_embedding = parse_bool("decoder.depth_embedding", s); },
      [&c] { return std::string(c.depth_embedding ? "true" : "false"); }}});

  out.push_back(
    {"runtime.threads",
     {[&c](const std::string & s) { c.threads = parse_integer<int>("runtime.threads", s); },
      [&c] { return std::to_string(c.threads); }}});
  return out;
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

std::size_t SceneConfig::feature_stride() const
{
  if (stride != 0) {
    return stride;
  }
  // The sampling scale follows input resolution: larger inputs use the coarser map.
  return image_height <= 256 ? 8 : 16;
}

depth_crf::DepthBins SceneConfig::bins() const
{
  return depth_crf::DepthBins::uniform(depth_bins, depth_min, depth_max);
}

depth_crf::CrfParams SceneConfig::crf() const
{
  depth_crf::CrfParams p;
  p.kernels = {
    {crf_appearance_weight, crf_appearance_theta, depth_crf::KernelKind::kAppearance},
    {crf_spatial_weight, crf_spatial_theta, depth_crf::KernelKind::kSpatial},
  };
  p.iterations = crf_iterations;
  p.window_radius = crf_window;
  return p;
}

view_transform::BevSpec SceneConfig::bev() const
{
  return view_transform::BevSpec::from_extent(bev_grid, bev_half_extent);
}

view_transform::CameraRig SceneConfig::rig() const
{
  return view_transform::make_surround_rig(
    cameras, camera_mount_radius, camera_height, radians(camera_pitch_deg), radians(camera_fov_deg), image_width,
    image_height);
}

void SceneConfig::validate() const
{
  auto fail = [](const std::string & msg) { throw ConfigError(msg); };
  if (frames == 0) {
    fail("scene.frames must be at least 1");
  }
  if (objects_min > objects_max) {
    fail(fmt::format("scene.objects_min ({}) exceeds scene.objects_max ({})", objects_min, objects_max));
  }
  if (objects_max > 64) {
    fail("scene.objects_max must not exceed 64");
  }
  if (image_height == 0 || image_width == 0) {
    fail("scene.image_height and scene.image_width must be positive");
  }
  const std::size_t n = feature_stride();
  if (n != 2 && n != 4 && n != 8 && n != 16) {
    fail(fmt::format("scene.stride must be one of 2, 4, 8, 16 (got {})", n));
  }
  if (image_height % n != 0 || image_width % n != 0) {
    fail(fmt::format(
      "image {}x{} is not divisible by stride {}; crop to {}x{}", image_height, image_width, n,
      image_height / n * n, image_width / n * n));
  }
  if (cameras == 0 || cameras > 16) {
    fail("camera.count must be in [1, 16]");
  }
  if (!(camera_fov_deg > 1.0 && camera_fov_deg < 179.0)) {
    fail("camera.fov_deg must lie in (1, 179)");
  }
  if (!(std::abs(camera_pitch_deg) < 89.0)) {
    fail("camera.pitch_deg must lie in (-89, 89)");
  }
  if (depth_bins < 1) {
    fail("depth.bins must be at least 1");
  }
  if (!(depth_min > 0.0 && depth_max > depth_min)) {
    fail("depth range must satisfy 0 < depth.min < depth.max");
  }
  try {
    bins().validate();
    crf().validate();
    bev().validate();
  } catch (const ConfigError &) {
    throw;
  } catch (const Error & e) {
    throw ConfigError(e.what());
  }
  if (image_channels == 0 || bev_channels == 0 || head_channels == 0 || depth_mlp_hidden == 0 ||
      fusion_reduced_channels == 0 || fusion_out_channels == 0) {
    fail("model channel widths must be positive");
  }
  if (fusion_window == 0) {
    fail("fusion.window must be at least 1");
  }
  if (classes == 0) {
    fail("decoder.classes must be at least 1");
  }
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    fail("decoder.threshold must lie in [0, 1)");
  }
  if (ref_heights.empty()) {
    fail("decoder.heights must list at least one height");
  }
  if (attn_samples == 0) {
    fail("decoder.samples must be at least 1");
  }
  if (threads < 1 || threads > 256) {
    fail("runtime.threads must lie in [1, 256]");
  }
}

SceneConfig parse_config(std::istream & in)
{
  SceneConfig cfg;
  auto table = fields(cfg);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = std::find_if(table.begin(), table.end(), [&](const auto & f) { return f.first == key; });
    if (it == table.end()) {
      std::string known;
      for (const auto & f : table) {
        known += "\n  " + f.first;
      }
      throw ConfigError(fmt::format("line {}: unknown key '{}'; known keys:{}", line_no, key, known));
    }
    try {
      it->second.set(value);
    } catch (const ConfigError & e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  cfg.validate();
  return cfg;
}

SceneConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  }
  return parse_config(in);
}

std::string config_to_string(const SceneConfig & cfg)
{
  SceneConfig copy = cfg;
  std::string out;
  for (const auto & [key, field] : fields(copy)) {
    out += key + " = " + field.get() + "\n";
  }
  return out;
}

}  // namespace bevnext::pipeline
