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

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "bevnext/common/error.hpp"
#include "bevnext/nn/init.hpp"
#include "bevnext/object_decoder/object_decoder.hpp"
#include "oracles.hpp"

namespace bevnext::object_decoder
{
namespace
{

nn::Tensor scaled(nn::Tensor t, float s)
{
  for (auto & v : t.data()) {
    v *= s;
  }
  return t;
}

AttnSpec random_attn(std::size_t c, std::size_t c_img, std::size_t heights, std::size_t samples, Rng & rng)
{
  AttnSpec a;
  a.embed_width = c;
  a.feature_width = c_img;
  a.heights = heights;
  a.samples = samples;
  const std::size_t hs = heights * samples;
  a.offset_weight = scaled(oracle::random_tensor({hs * 2, c}, rng), 0.3f);
  a.offset_bias = scaled(oracle::random_tensor({hs * 2}, rng), 0.5f);
  a.attn_weight = oracle::random_tensor({hs, c}, rng);
  a.attn_bias = oracle::random_tensor({hs}, rng);
  a.value_weight = oracle::random_tensor({c, c_img}, rng);
  a.value_bias = oracle::random_tensor({c}, rng);
  a.output_weight = oracle::random_tensor({c, c}, rng);
  a.output_bias = oracle::random_tensor({c}, rng);
  return a;
}

std::vector<Center> random_centers(std::size_t n, std::size_t grid, Rng & rng)
{
  std::vector<Center> centers;
  for (std::size_t i = 0; i < n; ++i) {
    centers.push_back({rng.uniform_index(grid), rng.uniform_index(grid), rng.uniform_index(3), 0.5f});
  }
  return centers;
}

TEST(Heatmap, ZeroHalfAndSaturation)
{
  Rng rng(1);
  const auto bev = oracle::random_tensor({4, 6, 6}, rng);
  auto spec = nn::zero_conv(4, 3, 3, 1, 1);
  const auto half = compute_heatmap(bev, spec);
  ASSERT_EQ(half.dims(), (std::vector<std::size_t>{3, 6, 6}));
  for (float v : half.data()) {
    EXPECT_EQ(v, 0.5f);
  }
  for (auto & b : spec.bias.data()) {
    b = -20.0f;
  }
  const auto low = compute_heatmap(bev, spec);
  for (float v : low.data()) {
    EXPECT_LT(v, 1e-8f);
    EXPECT_GT(v, 0.0f);
  }
  for (auto & b : spec.bias.data()) {
    b = 200.0f;
  }
  const auto high = compute_heatmap(bev, spec);
  for (float v : high.data()) {
    EXPECT_LT(v, 1.0f);
  }
}

TEST(Heatmap, MatchesConvSigmoidOracle)
{
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto bev = oracle::random_tensor({4, 8, 8}, rng);
    const auto spec = oracle::random_conv(4, 3, 3, 1, 1, rng);
    const auto got = compute_heatmap(bev, spec);
    const auto logits = oracle::conv2d(bev, spec);
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_NEAR(got[i], 1.0 / (1.0 + std::exp(-static_cast<double>(logits[i]))), 1e-6);
    }
  }
  EXPECT_THROW(compute_heatmap(oracle::random_tensor({5, 8, 8}, rng), oracle::random_conv(4, 3, 3, 1, 1, rng)), ShapeError);
}

TEST(Centers, StrictThreshold)
{
  nn::Tensor h({1, 1, 3});
  h[0] = 0.05f;
  h[1] = 0.1f;
  h[2] = 0.2f;
  const auto c = select_centers(h, 0.1);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].x, 2u);
  EXPECT_EQ(c[0].score, 0.2f);
  EXPECT_TRUE(select_centers(h, 0.5).empty());
}

TEST(Centers, TieOrderAndCap)
{
  const nn::Tensor h({2, 5, 5}, 0.5f);
  const auto c = select_centers(h, 0.1, 10);
  ASSERT_EQ(c.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(c[i].y, i / 5);
    EXPECT_EQ(c[i].x, i % 5);
    EXPECT_EQ(c[i].cls, 0u);
  }
}

TEST(Centers, ArgmaxClassAndMonotone)
{
  Rng rng(3);
  const auto h = oracle::random_tensor({3, 8, 8}, rng, 1e-4, 0.999);
  for (const auto & c : select_centers(h, 0.3)) {
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_GE(c.score, h.at(k, c.y, c.x));
    }
    EXPECT_EQ(c.score, h.at(c.cls, c.y, c.x));
  }
  std::size_t prev = select_centers(h, 0.0).size();
  EXPECT_EQ(prev, 64u);
  for (double tau = 0.05; tau < 1.0; tau += 0.05) {
    const std::size_t n = select_centers(h, tau).size();
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(Roi, BorderInteriorAndCount)
{
  Rng rng(4);
  const auto bev = oracle::random_tensor({2, 32, 32}, rng);
  const auto queries = oracle::random_tensor({kRoiCells, 2}, rng);
  const std::vector<Center> centers{{0, 0, 0, 0.5f}, {10, 12, 1, 0.4f}};
  const auto set = expand_roi(bev, centers, queries);
  ASSERT_EQ(set.rois.size(), 2u);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t dy = 0; dy < kRoiSide; ++dy) {
      for (std::size_t dx = 0; dx < kRoiSide; ++dx) {
        const float corner = set.rois[0].patch.at(c, dy, dx);
        if (dy < kRoiHalf || dx < kRoiHalf) {
          EXPECT_EQ(corner, 0.0f);
        } else {
          EXPECT_EQ(corner, bev.at(c, dy - kRoiHalf, dx - kRoiHalf));
        }
        EXPECT_EQ(set.rois[1].patch.at(c, dy, dx), bev.at(c, 12 + dy - kRoiHalf, 10 + dx - kRoiHalf));
      }
    }
  }
  const auto ones = expand_roi(nn::Tensor({1, 16, 16}, 1.0f), std::vector<Center>{{8, 8, 0, 1.0f}}, nn::Tensor({kRoiCells, 1}));
  double sum = 0.0;
  for (float v : ones.rois[0].patch.data()) {
    sum += v;
  }
  EXPECT_EQ(sum, 49.0);
}

TEST(References, PrincipalPointBehindAndRelift)
{
  const auto spec = view_transform::BevSpec::from_extent(16, 8.0);
  auto cam = view_transform::make_camera(0.0, 0.0, Eigen::Vector3d::Zero(), std::numbers::pi / 2.0, 64, 32);
  const view_transform::CameraRig rig(1, cam);
  RoiSet rois;
  rois.queries = nn::Tensor({kRoiCells, 1});
  rois.rois.push_back({Center{12, 8, 0, 1.0f}, nn::Tensor({1, 7, 7}), {}});
  rois.rois.push_back({Center{3, 8, 0, 1.0f}, nn::Tensor({1, 7, 7}), {}});
  const std::vector<double> heights{0.0};
  const auto refs = lift_references(rois, spec, heights, rig);
  ASSERT_EQ(refs.points.size(), 2 * kRoiCells);
  const auto & p = refs.projection(0, kRoiHalf * kRoiSide + kRoiHalf, 0, 0);
  const auto & pt = refs.point(0, kRoiHalf * kRoiSide + kRoiHalf, 0);
  EXPECT_DOUBLE_EQ(pt.x(), 4.5);
  EXPECT_DOUBLE_EQ(pt.y(), 0.5);
  EXPECT_TRUE(p.valid);
  EXPECT_NEAR(p.v, cam.cy, 1e-12);
  // the second ROI lies behind the camera
  for (std::size_t cell = 0; cell < kRoiCells; ++cell) {
    EXPECT_FALSE(refs.projection(1, cell, 0, 0).valid);
  }

  RoiSet axis;
  axis.queries = rois.queries;
  axis.rois.push_back({Center{12, 7, 0, 1.0f}, nn::Tensor({1, 7, 7}), {}});
  const auto spec_odd = view_transform::BevSpec::from_extent(15, 7.5);
  const auto on_axis = lift_references(axis, spec_odd, heights, rig);
  // 1 m cells centred on integers: column 12, row 7 is ego (5, 0) on the optical axis
  const auto & q = on_axis.projection(0, kRoiHalf * kRoiSide + kRoiHalf, 0, 0);
  ASSERT_TRUE(q.valid);
  EXPECT_NEAR(q.u, cam.cx, 1e-9);
  EXPECT_NEAR(q.v, cam.cy, 1e-9);
}

TEST(References, RandomRigRelift)
{
  Rng rng(5);
  const auto spec = view_transform::BevSpec::from_extent(16, 8.0);
  const std::vector<double> heights{-1.0, 0.5, 2.0};
  std::size_t valid = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto rig = oracle::random_rig(3, 64, 32, rng);
    RoiSet rois;
    rois.queries = nn::Tensor({kRoiCells, 1});
    for (const auto & c : random_centers(4, 16, rng)) {
      rois.rois.push_back({c, nn::Tensor({1, 7, 7}), {}});
    }
    const auto refs = lift_references(rois, spec, heights, rig);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t cell = 0; cell < kRoiCells; ++cell) {
        for (std::size_t h = 0; h < 3; ++h) {
          const auto & p = refs.point(r, cell, h);
          EXPECT_EQ(p.z(), heights[h]);
          for (std::size_t cam = 0; cam < 3; ++cam) {
            const auto & proj = refs.projection(r, cell, h, cam);
            const auto want = oracle::project(rig[cam], p);
            const bool inside = want.depth > 0.0 && want.u >= 0.0 && want.u <= 63.0 && want.v >= 0.0 && want.v <= 31.0;
            ASSERT_EQ(proj.valid, inside);
            if (proj.valid) {
              ++valid;
              const Eigen::Vector3d back = rig[cam].unproject(proj.u, proj.v, want.depth);
              ASSERT_NEAR((back - p).norm(), 0.0, 1e-5);
            }
          }
        }
      }
    }
  }
  EXPECT_GT(valid, 100u);
}

TEST(DepthEmbedding, ZeroPointwiseAndOracle)
{
  Rng rng(6);
  auto q = oracle::random_volume(4, 6, 8, rng);
  for (std::size_t k = 0; k < 8; ++k) {
    q.pixel(5)[k] = q.pixel(17)[k];
  }
  auto mlp = oracle::random_mlp({8, 6, 5}, {nn::Activation::kRelu, nn::Activation::kIdentity}, rng);
  const auto e = depth_embedding(q, mlp);
  ASSERT_EQ(e.dims(), (std::vector<std::size_t>{5, 4, 6}));
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_EQ(e[c * 24 + 5], e[c * 24 + 17]);
  }
  nn::Tensor rows({24, 8});
  for (std::size_t i = 0; i < 24; ++i) {
    for (std::size_t k = 0; k < 8; ++k) {
      rows.at(i, k) = static_cast<float>(q.pixel(i)[k]);
    }
  }
  const auto want = oracle::mlp(rows, mlp);
  for (std::size_t i = 0; i < 24; ++i) {
    for (std::size_t c = 0; c < 5; ++c) {
      ASSERT_NEAR(e[c * 24 + i], want.at(i, c), 1e-6);
    }
  }
  for (auto & layer : mlp.layers) {
    layer.weight = nn::Tensor(layer.weight.dims());
    layer.bias = nn::Tensor(layer.bias.dims());
  }
  const auto zero = depth_embedding(q, mlp);
  for (float v : zero.data()) {
    EXPECT_EQ(v, 0.0f);
  }
  auto narrow = oracle::random_mlp({6, 5}, {nn::Activation::kIdentity}, rng);
  EXPECT_THROW(depth_embedding(q, narrow), ShapeError);
}

TEST(Attention, WeightsSumToOnePerHeight)
{
  Rng rng(7);
  const auto spec = random_attn(6, 4, 4, 3, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = oracle::random_tensor({6}, rng, -3.0, 3.0);
    const auto plan = plan_query(q.data(), spec);
    for (std::size_t h = 0; h < 4; ++h) {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_GT(plan.weights[h * 3 + i], 0.0);
        s += plan.weights[h * 3 + i];
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

struct AttnCase
{
  view_transform::CameraRig rig;
  RoiSet rois;
  RefPointSet refs;
  std::vector<nn::Tensor> features;
  AttnSpec spec;
};

AttnCase random_case(Rng & rng, std::size_t heights, std::size_t samples)
{
  AttnCase c;
  const auto bev = view_transform::BevSpec::from_extent(16, 8.0);
  c.rig = oracle::random_rig(2, 64, 32, rng);
  std::vector<double> zs;
  for (std::size_t h = 0; h < heights; ++h) {
    zs.push_back(-1.0 + 3.0 * static_cast<double>(h) / static_cast<double>(std::max<std::size_t>(heights - 1, 1)));
  }
  const auto field = oracle::random_tensor({3, 16, 16}, rng);
  c.rois = expand_roi(field, random_centers(3, 16, rng), oracle::random_tensor({kRoiCells, 3}, rng));
  c.refs = lift_references(c.rois, bev, zs, c.rig);
  for (std::size_t i = 0; i < 2; ++i) {
    c.features.push_back(oracle::random_tensor({4, 4, 8}, rng));
  }
  c.spec = random_attn(3, 4, heights, samples, rng);
  return c;
}

TEST(Attention, MatchesNaiveOracle)
{
  Rng rng(8);
  std::size_t refined = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto c = random_case(rng, 1 + rng.uniform_index(4), 1 + rng.uniform_index(3));
    const auto emb = std::vector<nn::Tensor>{oracle::random_tensor({4, 4, 8}, rng), oracle::random_tensor({4, 4, 8}, rng)};
    const auto got = spatial_cross_attention(c.rois, c.refs, c.features, emb, 8, c.spec);
    std::vector<nn::Tensor> maps;
    for (std::size_t i = 0; i < 2; ++i) {
      maps.push_back(c.features[i]);
      for (std::size_t j = 0; j < maps[i].size(); ++j) {
        maps[i][j] += emb[i][j];
      }
    }
    const auto want = oracle::attention(c.rois, c.refs, maps, 8, c.spec);
    for (std::size_t r = 0; r < got.rois.size(); ++r) {
      ASSERT_EQ(got.rois[r].refined, want.rois[r].refined);
      for (std::size_t i = 0; i < want.rois[r].patch.size(); ++i) {
        ASSERT_NEAR(got.rois[r].patch[i], want.rois[r].patch[i], 1e-5);
      }
      for (bool b : got.rois[r].refined) {
        refined += b ? 1 : 0;
      }
    }
  }
  EXPECT_GT(refined, 50u);
}

TEST(Attention, DegenerateSampleAtReference)
{
  // one camera looking down +x; one height; one sample with zero offsets
  const auto cam = view_transform::make_camera(0.0, 0.0, Eigen::Vector3d::Zero(), std::numbers::pi / 2.0, 64, 32);
  const auto bev = view_transform::BevSpec::from_extent(16, 8.0);
  Rng rng(9);
  const auto field = oracle::random_tensor({2, 16, 16}, rng);
  auto rois = expand_roi(field, std::vector<Center>{{12, 8, 0, 1.0f}}, oracle::random_tensor({kRoiCells, 2}, rng));
  const std::vector<double> zs{0.3};
  const view_transform::CameraRig rig(1, cam);
  const auto refs = lift_references(rois, bev, zs, rig);
  AttnSpec spec = random_attn(2, 3, 1, 1, rng);
  spec.offset_weight = nn::Tensor({2, 2});
  spec.offset_bias = nn::Tensor({2});
  const std::vector<nn::Tensor> features{oracle::random_tensor({3, 4, 8}, rng)};
  const auto out = spatial_cross_attention(rois, refs, features, {}, 8, spec);
  for (std::size_t cell = 0; cell < kRoiCells; ++cell) {
    const auto & ref = refs.projection(0, cell, 0, 0);
    const std::size_t dy = cell / kRoiSide;
    const std::size_t dx = cell % kRoiSide;
    if (!ref.valid) {
      for (std::size_t ch = 0; ch < 2; ++ch) {
        EXPECT_EQ(out.rois[0].patch.at(ch, dy, dx), rois.rois[0].patch.at(ch, dy, dx));
      }
      continue;
    }
    bool inside = false;
    const auto s = oracle::bilinear(
      features[0], view_transform::image_to_feature(ref.u, 8), view_transform::image_to_feature(ref.v, 8), inside);
    for (std::size_t ch = 0; ch < 2; ++ch) {
      double o = spec.output_bias[ch];
      for (std::size_t i = 0; i < 2; ++i) {
        double vi = 0.0;
        if (inside) {
          vi = spec.value_bias[i];
          for (std::size_t j = 0; j < 3; ++j) {
            vi += static_cast<double>(spec.value_weight.at(i, j)) * s[j];
          }
        }
        o += static_cast<double>(spec.output_weight.at(ch, i)) * vi;
      }
      EXPECT_NEAR(out.rois[0].patch.at(ch, dy, dx), rois.rois[0].patch.at(ch, dy, dx) + o, 1e-5);
    }
  }
}

TEST(Attention, AllInvalidPassesThrough)
{
  Rng rng(10);
  auto c = random_case(rng, 2, 2);
  for (auto & p : c.refs.projections) {
    p.valid = false;
  }
  const auto out = spatial_cross_attention(c.rois, c.refs, c.features, {}, 8, c.spec);
  for (std::size_t r = 0; r < out.rois.size(); ++r) {
    EXPECT_TRUE(nn::bit_equal(out.rois[r].patch, c.rois.rois[r].patch));
    for (bool b : out.rois[r].refined) {
      EXPECT_FALSE(b);
    }
  }
}

TEST(Attention, ZeroEmbeddingEqualsNoEmbedding)
{
  Rng rng(11);
  auto c = random_case(rng, 3, 2);
  const std::vector<nn::Tensor> zero{nn::Tensor({4, 4, 8}), nn::Tensor({4, 4, 8})};
  const auto a = spatial_cross_attention(c.rois, c.refs, c.features, {}, 8, c.spec);
  const auto b = spatial_cross_attention(c.rois, c.refs, c.features, zero, 8, c.spec);
  for (std::size_t r = 0; r < a.rois.size(); ++r) {
    EXPECT_TRUE(nn::bit_equal(a.rois[r].patch, b.rois[r].patch));
  }
}

RegressionHeads zero_heads(std::size_t c, std::size_t hidden)
{
  auto branch = [&](std::size_t out) { return HeadBranch{nn::zero_conv(hidden, hidden, 3, 1, 1), nn::zero_conv(hidden, out, 1, 1, 0)}; };
  return {nn::zero_conv(c, hidden, 3, 1, 1), branch(2), branch(3), branch(1), branch(2), branch(2)};
}

TEST(Regress, ZeroHeadsDecodeDefaults)
{
  Rng rng(12);
  const auto bev = view_transform::BevSpec::from_extent(16, 8.0);
  const auto rois = expand_roi(oracle::random_tensor({3, 16, 16}, rng), std::vector<Center>{{4, 9, 2, 0.7f}}, nn::Tensor({kRoiCells, 3}));
  const auto d = regress(rois, zero_heads(3, 4), bev);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].cls, 2u);
  EXPECT_EQ(d[0].score, 0.7f);
  EXPECT_DOUBLE_EQ(d[0].x, bev.cell_center(4, 9).x());
  EXPECT_DOUBLE_EQ(d[0].y, bev.cell_center(4, 9).y());
  EXPECT_EQ(d[0].length, 1.0);
  EXPECT_EQ(d[0].width, 1.0);
  EXPECT_EQ(d[0].height, 1.0);
  EXPECT_EQ(d[0].yaw, 0.0);
  EXPECT_EQ(d[0].vx, 0.0);
  EXPECT_EQ(d[0].vy, 0.0);
  EXPECT_TRUE(regress(RoiSet{}, zero_heads(3, 4), bev).empty());
}

TEST(Regress, YawAndSizeDecoding)
{
  EXPECT_DOUBLE_EQ(decode_yaw(1.0, 0.0), std::numbers::pi / 2.0);
  EXPECT_DOUBLE_EQ(decode_yaw(0.0, -1.0), std::numbers::pi);
  EXPECT_DOUBLE_EQ(decode_yaw(-0.0, -1.0), std::numbers::pi);
  EXPECT_EQ(decode_yaw(0.0, 0.0), 0.0);
  for (double raw : {-1e6, -100.0, -30.0, 0.0, 2.0, 100.0, 1e300}) {
    const double s = decode_size(raw);
    EXPECT_GT(s, 0.0);
    EXPECT_TRUE(std::isfinite(s));
  }
}

TEST(Regress, BiasDrivenAttributesAndIo)
{
  Rng rng(13);
  const auto bev = view_transform::BevSpec::from_extent(16, 8.0);
  auto heads = zero_heads(3, 4);
  heads.rotation.out.bias[0] = 1.0f;
  heads.size.out.bias[1] = std::log(2.0f);
  heads.offset.out.bias[0] = 100.0f;
  heads.velocity.out.bias[1] = -3.0f;
  const auto rois = expand_roi(oracle::random_tensor({3, 16, 16}, rng), std::vector<Center>{{4, 9, 1, 0.25f}}, nn::Tensor({kRoiCells, 3}));
  const auto d = regress(rois, heads, bev);
  EXPECT_DOUBLE_EQ(d[0].yaw, std::numbers::pi / 2.0);
  EXPECT_NEAR(d[0].width, 2.0, 1e-6);
  EXPECT_NEAR(d[0].x, bev.cell_center(4, 9).x() + 0.5 * bev.cell_size, 1e-12);
  EXPECT_EQ(d[0].vy, -3.0);
  std::stringstream ss;
  write_detections(ss, d);
  const auto back = read_detections(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].cls, 1u);
  EXPECT_NEAR(back[0].yaw, d[0].yaw, 1e-6);
  std::stringstream bad("0 1 2 three\n");
  EXPECT_THROW(read_detections(bad), FormatError);
}

}  // namespace
}  // namespace bevnext::object_decoder
