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

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"
#include "bevnext/nn/tensor_io.hpp"
#include "bevnext/pipeline/cli.hpp"
#include "bevnext/pipeline/config.hpp"
#include "bevnext/pipeline/coverage.hpp"
#include "bevnext/pipeline/model.hpp"
#include "bevnext/pipeline/pipeline.hpp"
#include "bevnext/pipeline/scene.hpp"
#include "bevnext/pipeline/weights.hpp"
#include "oracles.hpp"

namespace bevnext::pipeline
{
namespace
{

namespace fs = std::filesystem;

fs::path scratch_dir()
{
  const auto * info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "bevnext_tests" / (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SceneConfig small_config()
{
  SceneConfig cfg;
  cfg.cameras = 2;
  cfg.frames = 3;
  cfg.image_height = 32;
  cfg.image_width = 64;
  cfg.bev_grid = 16;
  cfg.top_n = 8;
  return cfg;
}

std::uint64_t fnv1a(std::span<const float> values)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (float v : values) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 4; ++i) {
      h ^= (bits >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

int cli(const std::vector<std::string> & args, std::string * err_text = nullptr)
{
  std::vector<const char *> argv{"bevnext"};
  for (const auto & a : args) {
    argv.push_back(a.c_str());
  }
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text != nullptr) {
    *err_text = err.str();
  }
  return code;
}

bool same_detections(
  const std::vector<object_decoder::Detection> & a, const std::vector<object_decoder::Detection> & b)
{
  std::ostringstream sa;
  std::ostringstream sb;
  object_decoder::write_detections(sa, a);
  object_decoder::write_detections(sb, b);
  if (sa.str() != sb.str() || a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a[i].x, &b[i].x, sizeof(double) * 11) != 0 || a[i].score != b[i].score) {
      return false;
    }
  }
  return true;
}

TEST(Config, DefaultsArithmetic)
{
  const SceneConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.feature_stride(), 8u);
  EXPECT_EQ(cfg.feature_height(), 8u);
  EXPECT_EQ(cfg.feature_width(), 22u);
  SceneConfig big;
  big.image_height = 512;
  big.image_width = 704;
  EXPECT_EQ(big.feature_stride(), 16u);
}

TEST(Config, ParseCommentsAndUnknownKey)
{
  std::istringstream in("# desk\nscene.frames = 4  # short\ncamera.count=3\ndecoder.heights = 0, 1.5\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.frames, 4u);
  EXPECT_EQ(cfg.cameras, 3u);
  EXPECT_EQ(cfg.ref_heights, (std::vector<double>{0.0, 1.5}));
  std::istringstream bad("scene.frames = 4\nscene.frame = 2\n");
  try {
    parse_config(bad);
    FAIL() << "unknown key accepted";
  } catch (const ConfigError & e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("scene.frame'"), std::string::npos);
    EXPECT_NE(msg.find("scene.frames"), std::string::npos);
    EXPECT_NE(msg.find("line 2"), std::string::npos);
  }
  std::istringstream inconsistent("scene.image_width = 100\n");
  EXPECT_THROW(parse_config(inconsistent), ConfigError);
  std::istringstream badvalue("depth.min = fast\n");
  EXPECT_THROW(parse_config(badvalue), ConfigError);
}

TEST(Config, RoundTrip)
{
  SceneConfig cfg = small_config();
  cfg.crf_appearance_theta = 0.1 + 0.2;
  cfg.ref_heights = {-0.7, 1.0 / 3.0};
  cfg.cascade_input = res2fusion::CascadeInput::kReduced;
  cfg.depth_embedding = false;
  std::istringstream in(config_to_string(cfg));
  const auto back = parse_config(in);
  EXPECT_EQ(config_to_string(back), config_to_string(cfg));
  EXPECT_EQ(back.crf_appearance_theta, cfg.crf_appearance_theta);
  EXPECT_EQ(back.ref_heights, cfg.ref_heights);
  EXPECT_EQ(back.cascade_input, cfg.cascade_input);
}

TEST(Config, ShippedPresetsParse)
{
  const auto desk = load_config(fs::path(BEVNEXT_CONFIG_DIR) / "desk.cfg");
  SceneConfig defaults;
  defaults.stride = 8;
  EXPECT_EQ(config_to_string(desk), config_to_string(defaults));
  const auto full = load_config(fs::path(BEVNEXT_CONFIG_DIR) / "full_depth.cfg");
  EXPECT_EQ(full.bins().count(), 59u);
  EXPECT_DOUBLE_EQ(full.bins().centers.front(), 1.5);
  EXPECT_DOUBLE_EQ(full.bins().centers.back(), 59.5);
  EXPECT_EQ(full.feature_stride(), 8u);
  EXPECT_NO_THROW(check_bundle(model_to_bundle(model_skeleton(full), full), expected_weight_shapes(full)));
}

TEST(Scene, DeterministicPerSeed)
{
  const auto cfg = small_config();
  const auto a = gen_scene(cfg);
  const auto b = gen_scene(cfg);
  ASSERT_EQ(a.frames.size(), 3u);
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_EQ(a.frames[f].images[c].rgb, b.frames[f].images[c].rgb);
    }
    EXPECT_EQ(a.frames[f].points, b.frames[f].points);
  }
  auto other = cfg;
  other.seed = 8;
  EXPECT_NE(gen_scene(other).frames[0].images[0].rgb, a.frames[0].images[0].rgb);
}

TEST(Scene, KinematicsAndExtent)
{
  auto cfg = small_config();
  cfg.frames = 9;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    cfg.seed = seed;
    const auto scene = gen_scene(cfg);
    for (std::size_t f = 0; f < scene.frames.size(); ++f) {
      for (std::size_t i = 0; i < scene.frames[f].boxes.size(); ++i) {
        const auto & b = scene.frames[f].boxes[i];
        const auto & b0 = scene.frames[0].boxes[i];
        EXPECT_LT(std::abs(b.center.x()), cfg.bev_half_extent);
        EXPECT_LT(std::abs(b.center.y()), cfg.bev_half_extent);
        EXPECT_NEAR(b.center.x() - b0.center.x(), b.velocity.x() * kFrameInterval * static_cast<double>(f), 1e-12);
        EXPECT_NEAR(b.center.y() - b0.center.y(), b.velocity.y() * kFrameInterval * static_cast<double>(f), 1e-12);
      }
    }
  }
  // a unit-velocity box advances half a metre per frame
  GtBox b;
  b.velocity = {1.0, 0.0};
  EXPECT_DOUBLE_EQ(b.velocity.x() * kFrameInterval, 0.5);
}

TEST(Scene, SaveLoadRoundTrip)
{
  const auto dir = scratch_dir();
  const auto cfg = small_config();
  const auto scene = gen_scene(cfg);
  save_scene(scene, cfg, dir);
  const auto back = load_scene(dir, cfg);
  ASSERT_EQ(back.frames.size(), scene.frames.size());
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    for (std::size_t c = 0; c < cfg.cameras; ++c) {
      EXPECT_EQ(back.frames[f].images[c].rgb, scene.frames[f].images[c].rgb);
    }
    EXPECT_EQ(back.frames[f].points, scene.frames[f].points);
    ASSERT_EQ(back.frames[f].boxes.size(), scene.frames[f].boxes.size());
    for (std::size_t i = 0; i < scene.frames[f].boxes.size(); ++i) {
      EXPECT_EQ(back.frames[f].boxes[i].center, scene.frames[f].boxes[i].center);
    }
  }
}

TEST(Backbone, ZeroDimsAndGolden)
{
  Rng rng(3);
  const auto image = oracle::random_image(64, 176, rng);
  const SceneConfig cfg;
  auto model = model_skeleton(cfg);
  const auto zero = toy_backbone(image, 8, model.backbone);
  ASSERT_EQ(zero.dims(), (std::vector<std::size_t>{16, 8, 22}));
  for (float v : zero.data()) {
    EXPECT_EQ(v, 0.0f);
  }
  for (std::size_t stride : {2u, 4u, 8u, 16u}) {
    auto c = cfg;
    c.stride = stride;
    const auto m = default_model(c);
    const auto f = toy_backbone(image, stride, m.backbone);
    EXPECT_EQ(f.dims(), (std::vector<std::size_t>{16, 64 / stride, 176 / stride}));
  }
  EXPECT_THROW(toy_backbone(oracle::random_image(60, 176, rng), 8, model.backbone), ShapeError);
  const auto golden = toy_backbone(image, 8, default_model(cfg).backbone);
  // stride 8 has no pre-pooling: three stride-2 convs with ReLU
  nn::Tensor want({3, 64, 176});
  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x < 176; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        want.at(c, y, x) = image.at(y, x, c);
      }
    }
  }
  for (const auto & conv : default_model(cfg).backbone) {
    want = oracle::conv2d(want, conv);
    for (auto & v : want.data()) {
      v = std::max(v, 0.0f);
    }
  }
  ASSERT_EQ(golden.dims(), want.dims());
  for (std::size_t i = 0; i < want.size(); ++i) {
    ASSERT_NEAR(golden[i], want[i], 1e-5);
  }
  EXPECT_EQ(fnv1a(golden.data()), 10854834615085663422ULL);
}

TEST(Coverage, EmptyFullAndMonotone)
{
  const auto cam = view_transform::make_camera(0.0, 0.0, Eigen::Vector3d::Zero(), 1.2, 64, 32);
  const auto bins = depth_crf::DepthBins::uniform(8, 1.0, 9.0);
  const auto none = project_depth_labels({}, cam, 4, 8, 8, bins);
  EXPECT_EQ(none.coverage, 0.0);
  std::vector<Eigen::Vector3d> grid;
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      grid.push_back(cam.unproject(view_transform::feature_to_image(x, 8), view_transform::feature_to_image(y, 8), 4.1));
    }
  }
  const auto full = project_depth_labels(grid, cam, 4, 8, 8, bins);
  EXPECT_EQ(full.coverage, 1.0);
  for (auto l : full.labels) {
    EXPECT_EQ(l, 3);
  }
  auto cfg = small_config();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const auto scene = gen_scene(cfg);
    const auto & pts = scene.frames.back().points;
    for (const auto & c : cfg.rig()) {
      double prev = 0.0;
      for (std::size_t stride : {2u, 4u, 8u, 16u}) {
        const auto l = project_depth_labels(pts, c, 32 / stride, 64 / stride, stride, bins);
        EXPECT_GE(l.coverage, prev);
        EXPECT_LE(l.coverage, 1.0);
        prev = l.coverage;
      }
    }
  }
}

TEST(Weights, RoundTripAndErrors)
{
  const auto dir = scratch_dir();
  const auto cfg = small_config();
  const auto bundle = model_to_bundle(default_model(cfg), cfg);
  EXPECT_EQ(bundle.tensors.size(), expected_weight_shapes(cfg).size());
  EXPECT_TRUE(bundle.contains("res2fusion.reduce.0.weight"));
  EXPECT_TRUE(bundle.contains("res2fusion.final.bias"));
  save_weights(bundle, dir / "w.bvnx");
  const auto back = load_weights(dir / "w.bvnx");
  EXPECT_TRUE(bit_equal(bundle, back));
  EXPECT_NO_THROW(model_from_bundle(back, cfg));
  const auto desk = expected_weight_shapes(SceneConfig{});
  EXPECT_EQ(desk.count("res2fusion.cascade.1.weight"), 1u);
  EXPECT_EQ(desk.count("res2fusion.cascade.2.bias"), 1u);
  EXPECT_EQ(desk.count("res2fusion.cascade.0.weight"), 0u);

  {
    std::fstream f(dir / "w.bvnx", std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
  }
  try {
    load_weights(dir / "w.bvnx");
    FAIL() << "corrupt magic accepted";
  } catch (const FormatError & e) {
    EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos) << e.what();
  }

  auto missing = bundle;
  missing.tensors.erase("heatmap.bias");
  try {
    model_from_bundle(missing, cfg);
    FAIL() << "missing key accepted";
  } catch (const ShapeError & e) {
    EXPECT_NE(std::string(e.what()).find("heatmap.bias"), std::string::npos) << e.what();
  }
  auto unknown = bundle;
  unknown.tensors["heatmap.extra"] = nn::Tensor({1});
  try {
    model_from_bundle(unknown, cfg);
    FAIL() << "unknown key accepted";
  } catch (const ShapeError & e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("heatmap.extra"), std::string::npos);
    EXPECT_NE(msg.find("decoder.queries"), std::string::npos);
  }
  auto reshaped = bundle;
  reshaped.tensors["heatmap.bias"] = nn::Tensor({7});
  EXPECT_THROW(model_from_bundle(reshaped, cfg), ShapeError);
}

TEST(Pipeline, DeskShapes)
{
  const SceneConfig cfg;
  auto short_cfg = cfg;
  short_cfg.frames = 2;
  const auto scene = gen_scene(short_cfg);
  const auto model = default_model(short_cfg);
  const auto r = run_pipeline(scene, short_cfg, model);
  ASSERT_EQ(r.depth.size(), 6u);
  for (const auto & d : r.depth) {
    EXPECT_EQ(d.height, 8u);
    EXPECT_EQ(d.width, 22u);
    EXPECT_EQ(d.bins, 8u);
  }
  ASSERT_EQ(r.bev_frames.size(), 2u);
  EXPECT_EQ(r.bev_frames[0].dims(), (std::vector<std::size_t>{16, 32, 32}));
  EXPECT_EQ(r.encoded.dims(), (std::vector<std::size_t>{16, 32, 32}));
  EXPECT_EQ(r.heatmap.dims(), (std::vector<std::size_t>{3, 32, 32}));
  EXPECT_LE(r.detections.size(), 32u);
  EXPECT_EQ(r.coverage.size(), 6u);
}

TEST(Pipeline, SingleFrameAndIterationShapes)
{
  auto cfg = small_config();
  cfg.frames = 1;
  cfg.fusion_window = 1;
  const auto scene = gen_scene(cfg);
  const auto r1 = run_pipeline(scene, cfg, default_model(cfg));
  EXPECT_EQ(r1.bev_frames.size(), 1u);
  EXPECT_EQ(r1.fused.dims(), (std::vector<std::size_t>{16, 16, 16}));

  auto t0 = small_config();
  t0.crf_iterations = 0;
  auto t5 = small_config();
  t5.crf_iterations = 5;
  const auto s = gen_scene(t0);
  const auto model = default_model(t0);
  const auto a = run_pipeline(s, t0, model);
  const auto b = run_pipeline(s, t5, model);
  ASSERT_EQ(a.depth.size(), b.depth.size());
  for (std::size_t c = 0; c < a.depth.size(); ++c) {
    EXPECT_EQ(a.depth[c].probs.size(), b.depth[c].probs.size());
    EXPECT_NE(a.depth[c].probs, b.depth[c].probs);
    EXPECT_TRUE(nn::bit_equal(a.features[c], b.features[c]));
  }
  EXPECT_EQ(a.fused.dims(), b.fused.dims());
  EXPECT_EQ(a.encoded.dims(), b.encoded.dims());
  EXPECT_EQ(a.heatmap.dims(), b.heatmap.dims());
}

TEST(Pipeline, EmptySceneNoDetections)
{
  auto cfg = small_config();
  cfg.objects_min = 0;
  cfg.objects_max = 0;
  const auto scene = gen_scene(cfg);
  EXPECT_TRUE(scene.frames.back().boxes.empty());
  const auto r = run_pipeline(scene, cfg, default_model(cfg));
  EXPECT_TRUE(r.detections.empty());
}

TEST(Pipeline, DeterministicAcrossThreads)
{
  SceneConfig cfg;
  cfg.frames = 3;
  const auto scene = gen_scene(cfg);
  const auto model = default_model(cfg);
  set_num_threads(1);
  const auto a = run_pipeline(scene, cfg, model);
  set_num_threads(4);
  const auto b = run_pipeline(scene, cfg, model);
  set_num_threads(1);
  EXPECT_FALSE(a.detections.empty());
  EXPECT_TRUE(same_detections(a.detections, b.detections));
  EXPECT_TRUE(nn::bit_equal(a.heatmap, b.heatmap));
  EXPECT_TRUE(nn::bit_equal(a.fused, b.fused));
}

TEST(Pipeline, ShapeContractFailsFast)
{
  auto cfg = small_config();
  const auto scene = gen_scene(cfg);
  auto model = default_model(cfg);
  EXPECT_NO_THROW(check_shape_contract(cfg, model, scene));
  Rng rng(1);
  auto bad = model;
  bad.heatmap = oracle::random_conv(16, 2, 3, 1, 1, rng);
  EXPECT_THROW(check_shape_contract(cfg, bad, scene), ShapeError);
  auto fewer = scene;
  fewer.frames.back().images.pop_back();
  EXPECT_THROW(check_shape_contract(cfg, model, fewer), ShapeError);
  auto other = cfg;
  other.depth_bins = 6;
  try {
    run_pipeline(scene, other, model);
    FAIL() << "mismatched depth head accepted";
  } catch (const ShapeError & e) {
    EXPECT_EQ(std::string(e.what()).rfind("[", 0), 0u) << e.what();
  }
}

TEST(Cli, EndToEndAndExitCodes)
{
  const auto dir = scratch_dir();
  {
    std::ofstream f(dir / "small.cfg");
    f << config_to_string(small_config());
  }
  const std::string cfg = (dir / "small.cfg").string();
  ASSERT_EQ(cli({"generate", "--config", cfg, "--out", (dir / "scene").string()}), 0);
  ASSERT_EQ(cli({"init-weights", "--config", cfg, "--out", (dir / "w.bvnx").string()}), 0);
  ASSERT_EQ(
    cli({"run", "--config", cfg, "--weights", (dir / "w.bvnx").string(), "--scene", (dir / "scene").string(), "--out",
         (dir / "out").string(), "--dump-depth", "--dump-heatmap"}),
    0);
  EXPECT_TRUE(fs::exists(dir / "out" / "detections.txt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "heatmap.ppm"));
  EXPECT_TRUE(fs::exists(dir / "out" / "depth_cam_1.ppm"));

  {
    std::ofstream f(dir / "bad.cfg");
    f << "scene.colour = red\n";
  }
  std::string err;
  EXPECT_EQ(cli({"generate", "--config", (dir / "bad.cfg").string(), "--out", (dir / "x").string()}, &err), 2);
  EXPECT_NE(err.find("scene.colour"), std::string::npos);

  auto wide = small_config();
  wide.bev_channels = 8;
  {
    std::ofstream f(dir / "wide.cfg");
    f << config_to_string(wide);
  }
  EXPECT_EQ(
    cli({"run", "--config", (dir / "wide.cfg").string(), "--weights", (dir / "w.bvnx").string(), "--scene",
         (dir / "scene").string(), "--out", (dir / "out2").string()}),
    3);
  EXPECT_EQ(cli({"frobnicate"}), 2);
  EXPECT_EQ(cli({"--help"}), 0);
}

}  // namespace
}  // namespace bevnext::pipeline
