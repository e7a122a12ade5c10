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

#include "bevnext/pipeline/model.hpp"

#include <functional>

#include <fmt/format.h>

#include "bevnext/common/error.hpp"
#include "bevnext/common/rng.hpp"
#include "bevnext/nn/init.hpp"

namespace bevnext::pipeline
{
namespace
{

// Heatmap gain on the wired saturation channel and the matching bias. A cell
// needs about 1.8 units of pooled saturation to cross the default threshold.
constexpr float kObjectGain = 1.0f;
constexpr float kObjectBias = -4.0f;

struct Slot
{
  std::string name;
  nn::Tensor * tensor;
  std::size_t fan_in;
};

void conv_slots(std::vector<Slot> & out, const std::string & name, nn::ConvSpec & conv)
{
  const std::size_t fan_in = conv.in_channels * conv.kernel_size * conv.kernel_size;
  out.push_back({name + ".weight", &conv.weights, fan_in});
  out.push_back({name + ".bias", &conv.bias, fan_in});
}

void branch_slots(std::vector<Slot> & out, const std::string & name, object_decoder::HeadBranch & branch)
{
  conv_slots(out, name + ".hidden", branch.hidden);
  conv_slots(out, name + ".out", branch.out);
}

// Fixed enumeration order of every parameter; the seeded init walks it in order.
std::vector<Slot> slots(Model & m)
{
  std::vector<Slot> out;
  for (std::size_t i = 0; i < m.backbone.size(); ++i) {
    conv_slots(out, fmt::format("backbone.{}", i), m.backbone[i]);
  }
  conv_slots(out, "depth_head", m.depth_head);
  conv_slots(out, "context_head", m.context_head);
  for (std::size_t i = 0; i < m.fusion.reduce.size(); ++i) {
    conv_slots(out, fmt::format("res2fusion.reduce.{}", i), m.fusion.reduce[i]);
  }
  for (std::size_t i = 0; i < m.fusion.cascade.size(); ++i) {
    conv_slots(out, fmt::format("res2fusion.cascade.{}", i + 1), m.fusion.cascade[i]);
  }
  conv_slots(out, "res2fusion.final", m.fusion.final);
  conv_slots(out, "neck.down", m.neck.down);
  conv_slots(out, "neck.merge", m.neck.merge);
  conv_slots(out, "heatmap", m.heatmap);

  const std::size_t c = m.queries.dim(1);
  out.push_back({"decoder.queries", &m.queries, c});
  for (std::size_t i = 0; i < m.depth_mlp.layers.size(); ++i) {
    auto & layer = m.depth_mlp.layers[i];
    const std::size_t fan_in = layer.weight.dim(1);
    out.push_back({fmt::format("decoder.depth_mlp.{}.weight", i), &layer.weight, fan_in});
    out.push_back({fmt::format("decoder.depth_mlp.{}.bias", i), &layer.bias, fan_in});
  }
  auto & a = m.attention;
  out.push_back({"decoder.attn.offset.weight", &a.offset_weight, a.embed_width});
  out.push_back({"decoder.attn.offset.bias", &a.offset_bias, a.embed_width});
  out.push_back({"decoder.attn.weights.weight", &a.attn_weight, a.embed_width});
  out.push_back({"decoder.attn.weights.bias", &a.attn_bias, a.embed_width});
  out.push_back({"decoder.attn.value.weight", &a.value_weight, a.feature_width});
  out.push_back({"decoder.attn.value.bias", &a.value_bias, a.feature_width});
  out.push_back({"decoder.attn.output.weight", &a.output_weight, a.embed_width});
  out.push_back({"decoder.attn.output.bias", &a.output_bias, a.embed_width});

  conv_slots(out, "heads.shared", m.heads.shared);
  branch_slots(out, "heads.offset", m.heads.offset);
  branch_slots(out, "heads.size", m.heads.size);
  branch_slots(out, "heads.height", m.heads.height);
  branch_slots(out, "heads.rotation", m.heads.rotation);
  branch_slots(out, "heads.velocity", m.heads.velocity);
  return out;
}

object_decoder::HeadBranch zero_branch(std::size_t hidden, std::size_t outputs)
{
  return {nn::zero_conv(hidden, hidden, 3, 1, 1), nn::zero_conv(hidden, outputs, 1, 1, 0)};
}

}  // namespace

BackbonePlan backbone_plan(std::size_t stride)
{
  BackbonePlan plan;
  switch (stride) {
    case 2: plan.strides = {2, 1, 1}; break;
    case 4: plan.strides = {2, 2, 1}; break;
    case 8: plan.strides = {2, 2, 2}; break;
    case 16: plan.prepool = 2; break;
    default: throw ConfigError(fmt::format("backbone: unsupported stride {}", stride));
  }
  return plan;
}

Model model_skeleton(const SceneConfig & cfg)
{
  cfg.validate();
  const BackbonePlan plan = backbone_plan(cfg.feature_stride());
  const std::size_t ci = cfg.image_channels;
  const std::size_t cb = cfg.bev_channels;
  const std::size_t cr = cfg.fusion_reduced_channels;
  const std::size_t cf = cfg.fusion_out_channels;
  const std::size_t ch = cfg.head_channels;
  const std::size_t k = cfg.depth_bins;
  const std::size_t g = res2fusion::group_count(cfg.frames, cfg.fusion_window);

  Model m;
  m.backbone[0] = nn::zero_conv(3, ci, 3, plan.strides[0], 1);
  m.backbone[1] = nn::zero_conv(ci, ci, 3, plan.strides[1], 1);
  m.backbone[2] = nn::zero_conv(ci, ci, 3, plan.strides[2], 1);
  m.depth_head = nn::zero_conv(ci, k, 1, 1, 0);
  m.context_head = nn::zero_conv(ci, cb, 1, 1, 0);

  m.fusion.window = cfg.fusion_window;
  m.fusion.cascade_input = cfg.cascade_input;
  for (std::size_t i = 0; i < g; ++i) {
    m.fusion.reduce.push_back(nn::zero_conv(cfg.fusion_window * cb, cr, 1, 1, 0));
  }
  for (std::size_t i = 1; i < g; ++i) {
    m.fusion.cascade.push_back(nn::zero_conv(cr, cr, 3, 1, 1));
  }
  m.fusion.final = nn::zero_conv(g * cr, cf, 1, 1, 0);
  m.neck.down = nn::zero_conv(cf, cf, 3, 2, 1);
  m.neck.merge = nn::zero_conv(2 * cf, cf, 1, 1, 0);
  m.heatmap = nn::zero_conv(cf, cfg.classes, 3, 1, 1);

  m.queries = nn::Tensor({object_decoder::kRoiCells, cf});
  m.depth_mlp.layers = {
    {nn::Tensor({cfg.depth_mlp_hidden, k}), nn::Tensor({cfg.depth_mlp_hidden}), nn::Activation::kRelu},
    {nn::Tensor({ci, cfg.depth_mlp_hidden}), nn::Tensor({ci}), nn::Activation::kIdentity},
  };
  auto & a = m.attention;
  a.embed_width = cf;
  a.feature_width = ci;
  a.heights = cfg.ref_heights.size();
  a.samples = cfg.attn_samples;
  const std::size_t hs = a.heights * a.samples;
  a.offset_weight = nn::Tensor({hs * 2, cf});
  a.offset_bias = nn::Tensor({hs * 2});
  a.attn_weight = nn::Tensor({hs, cf});
  a.attn_bias = nn::Tensor({hs});
  a.value_weight = nn::Tensor({cf, ci});
  a.value_bias = nn::Tensor({cf});
  a.output_weight = nn::Tensor({cf, cf});
  a.output_bias = nn::Tensor({cf});

  m.heads.shared = nn::zero_conv(cf, ch, 3, 1, 1);
  m.heads.offset = zero_branch(ch, 2);
  m.heads.size = zero_branch(ch, 3);
  m.heads.height = zero_branch(ch, 1);
  m.heads.rotation = zero_branch(ch, 2);
  m.heads.velocity = zero_branch(ch, 2);
  return m;
}

std::map<std::string, std::vector<std::size_t>> expected_weight_shapes(const SceneConfig & cfg)
{
  Model m = model_skeleton(cfg);
  std::map<std::string, std::vector<std::size_t>> shapes;
  for (const auto & s : slots(m)) {
    shapes.emplace(s.name, s.tensor->dims());
  }
  return shapes;
}

WeightBundle model_to_bundle(const Model & model, const SceneConfig & cfg)
{
  Model copy = model;
  WeightBundle bundle;
  for (const auto & s : slots(copy)) {
    bundle.tensors.emplace(s.name, *s.tensor);
  }
  check_bundle(bundle, expected_weight_shapes(cfg));
  return bundle;
}

Model model_from_bundle(const WeightBundle & bundle, const SceneConfig & cfg)
{
  Model m = model_skeleton(cfg);
  std::map<std::string, std::vector<std::size_t>> shapes;
  auto table = slots(m);
  for (const auto & s : table) {
    shapes.emplace(s.name, s.tensor->dims());
  }
  check_bundle(bundle, shapes);
  for (auto & s : table) {
    const auto & src = bundle.tensors.at(s.name);
    src.require_finite(s.name);
    *s.tensor = src;
  }
  return m;
}

Model default_model(const SceneConfig & cfg)
{
  Model m = model_skeleton(cfg);
  Rng rng(cfg.model_seed);
  for (auto & s : slots(m)) {
    *s.tensor = nn::init_uniform(s.tensor->dims(), s.fan_in, rng);
  }

  // Saturation channel: layer 0 computes relu of the four signed colour
  // differences, layer 1 sums them into channel 0, later stages copy channel 0.
  auto clear_row = [](nn::ConvSpec & conv, std::size_t row) {
    const std::size_t per_row = conv.weights.size() / conv.out_channels;
    std::fill_n(conv.weights.data().begin() + static_cast<std::ptrdiff_t>(row * per_row), per_row, 0.0f);
    conv.bias[row] = 0.0f;
  };
  auto centre = [](nn::ConvSpec & conv, std::size_t out, std::size_t in, float w) {
    const std::size_t r = conv.kernel_size / 2;
    conv.weights.at(out, in, r, r) = w;
  };

  auto & b0 = m.backbone[0];
  const std::size_t wired = std::min<std::size_t>(4, cfg.image_channels);
  const std::size_t pairs[4][2] = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  for (std::size_t r = 0; r < wired; ++r) {
    clear_row(b0, r);
    centre(b0, r, pairs[r][0], 1.0f);
    centre(b0, r, pairs[r][1], -1.0f);
  }
  clear_row(m.backbone[1], 0);
  for (std::size_t r = 0; r < wired; ++r) {
    centre(m.backbone[1], 0, r, 1.0f);
  }
  clear_row(m.backbone[2], 0);
  centre(m.backbone[2], 0, 0, 1.0f);
  clear_row(m.context_head, 0);
  centre(m.context_head, 0, 0, 1.0f);

  // The current frame is the last slot of group 0.
  clear_row(m.fusion.reduce[0], 0);
  centre(m.fusion.reduce[0], 0, (cfg.fusion_window - 1) * cfg.bev_channels, 1.0f);
  const std::size_t g = m.fusion.reduce.size();
  clear_row(m.fusion.final, 0);
  centre(m.fusion.final, 0, (g - 1) * cfg.fusion_reduced_channels, 1.0f);
  clear_row(m.neck.merge, 0);
  centre(m.neck.merge, 0, 0, 1.0f);

  // Each class reads a different 3x3 footprint of the saturation channel.
  for (std::size_t cls = 0; cls < cfg.classes; ++cls) {
    clear_row(m.heatmap, cls);
    m.heatmap.bias[cls] = kObjectBias;
    for (std::size_t dy = 0; dy < 3; ++dy) {
      for (std::size_t dx = 0; dx < 3; ++dx) {
        const bool on = cls % 3 == 0 ? (dy == 1 && dx == 1) : cls % 3 == 1 ? dy == 1 : dx == 1;
        const float taps = cls % 3 == 0 ? 1.0f : 3.0f;
        m.heatmap.weights.at(cls, 0, dy, dx) = on ? kObjectGain / taps : 0.0f;
      }
    }
  }
  return m;
}

nn::Tensor image_tensor(const RgbImage & image)
{
  nn::Tensor t({3, image.height, image.width});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < image.height; ++y) {
      for (std::size_t x = 0; x < image.width; ++x) {
        t.at(c, y, x) = image.at(y, x, c);
      }
    }
  }
  return t;
}

nn::Tensor toy_backbone(const RgbImage & image, std::size_t stride, const std::array<nn::ConvSpec, 3> & convs)
{
  if (stride == 0 || image.height % stride != 0 || image.width % stride != 0) {
    throw ShapeError(fmt::format(
      "toy_backbone: image {}x{} is not divisible by stride {}", image.height, image.width, stride));
  }
  const BackbonePlan plan = backbone_plan(stride);
  for (std::size_t i = 0; i < convs.size(); ++i) {
    if (convs[i].stride != plan.strides[i] || convs[i].kernel_size != 3 || convs[i].padding != 1) {
      throw ShapeError(fmt::format("toy_backbone: layer {} must be 3x3, padding 1, stride {}", i, plan.strides[i]));
    }
  }
  nn::Tensor x = image_tensor(image);
  if (plan.prepool > 1) {
    const std::size_t p = plan.prepool;
    nn::Tensor pooled({3, image.height / p, image.width / p});
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < pooled.dim(1); ++y) {
        for (std::size_t xx = 0; xx < pooled.dim(2); ++xx) {
          double acc = 0.0;
          for (std::size_t dy = 0; dy < p; ++dy) {
            for (std::size_t dx = 0; dx < p; ++dx) {
              acc += x.at(c, y * p + dy, xx * p + dx);
            }
          }
          pooled.at(c, y, xx) = static_cast<float>(acc / static_cast<double>(p * p));
        }
      }
    }
    x = std::move(pooled);
  }
  for (const auto & conv : convs) {
    x = nn::conv2d(x, conv);
    nn::relu_inplace(x);
  }
  return x;
}

}  // namespace bevnext::pipeline
