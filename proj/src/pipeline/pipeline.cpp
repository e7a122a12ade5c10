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

#include "bevnext/pipeline/pipeline.hpp"

#include <fmt/format.h>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"
#include "bevnext/nn/kernels.hpp"
#include "bevnext/pipeline/coverage.hpp"
#include "bevnext/view_transform/view_transform.hpp"

namespace bevnext::pipeline
{
namespace
{

template <typename Fn>
auto stage(const char * tag, Fn && fn) -> decltype(fn())
{
  try {
    return fn();
  } catch (const ShapeError & e) {
    throw ShapeError(fmt::format("[{}] {}", tag, e.what()));
  } catch (const ConfigError & e) {
    throw ConfigError(fmt::format("[{}] {}", tag, e.what()));
  } catch (const FormatError & e) {
    throw FormatError(fmt::format("[{}] {}", tag, e.what()));
  } catch (const std::exception & e) {
    throw Error(fmt::format("[{}] {}", tag, e.what()));
  }
}

void expect(bool ok, const std::string & what)
{
  if (!ok) {
    throw ShapeError("shape contract: " + what);
  }
}

std::string conv_desc(const nn::ConvSpec & c)
{
  return fmt::format("{}->{} k{} s{}", c.in_channels, c.out_channels, c.kernel_size, c.stride);
}

}  // namespace

void check_shape_contract(const SceneConfig & cfg, const Model & model, const SyntheticScene & scene)
{
  cfg.validate();
  const std::size_t n = cfg.feature_stride();
  const std::size_t fh = cfg.feature_height();
  const std::size_t fw = cfg.feature_width();
  const std::size_t ci = cfg.image_channels;

  expect(
    scene.frames.size() == cfg.frames,
    fmt::format("scene has {} frames, config expects {}", scene.frames.size(), cfg.frames));
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const auto & images = scene.frames[f].images;
    expect(
      images.size() == cfg.cameras,
      fmt::format("frame {} has {} images, config has {} cameras", f, images.size(), cfg.cameras));
    for (std::size_t c = 0; c < images.size(); ++c) {
      expect(
        images[c].height == cfg.image_height && images[c].width == cfg.image_width,
        fmt::format(
          "frame {} camera {} is {}x{}, expected {}x{}", f, c, images[c].height, images[c].width, cfg.image_height,
          cfg.image_width));
    }
  }

  // backbone: 3 -> C_img at H / n x W / n
  const BackbonePlan plan = backbone_plan(n);
  std::size_t h = cfg.image_height / plan.prepool;
  std::size_t w = cfg.image_width / plan.prepool;
  std::size_t channels = 3;
  for (std::size_t i = 0; i < model.backbone.size(); ++i) {
    const auto & conv = model.backbone[i];
    conv.validate();
    expect(
      conv.in_channels == channels && conv.kernel_size == 3 && conv.padding == 1 && conv.stride == plan.strides[i],
      fmt::format("backbone.{} is {}", i, conv_desc(conv)));
    h = nn::conv_output_extent(h, 3, conv.stride, 1);
    w = nn::conv_output_extent(w, 3, conv.stride, 1);
    channels = conv.out_channels;
  }
  expect(h == fh && w == fw, fmt::format("backbone output {}x{} differs from feature dims {}x{}", h, w, fh, fw));
  expect(channels == ci, fmt::format("backbone emits {} channels, config has {}", channels, ci));

  model.depth_head.validate();
  model.context_head.validate();
  expect(
    model.depth_head.in_channels == ci && model.depth_head.kernel_size == 1 &&
      model.depth_head.out_channels == cfg.depth_bins,
    fmt::format("depth_head is {}, expected {}->{} k1", conv_desc(model.depth_head), ci, cfg.depth_bins));
  expect(
    model.context_head.in_channels == ci && model.context_head.kernel_size == 1 &&
      model.context_head.out_channels == cfg.bev_channels,
    fmt::format("context_head is {}, expected {}->{} k1", conv_desc(model.context_head), ci, cfg.bev_channels));

  const auto bev = cfg.bev();
  bev.validate();
  expect(bev.grid % 2 == 0, "BEV grid must be even for the neck");
  expect(model.fusion.window == cfg.fusion_window, "fusion window differs from config");
  model.fusion.validate(cfg.frames, cfg.bev_channels);
  const std::size_t cf = model.fusion.final.out_channels;

  model.neck.down.validate();
  model.neck.merge.validate();
  expect(model.neck.down.in_channels == cf, "neck.down input differs from fusion output");
  expect(
    model.neck.merge.in_channels == cf + model.neck.down.out_channels && model.neck.merge.kernel_size == 1,
    "neck.merge must be 1x1 over the fused and upsampled channels");
  const std::size_t ce = model.neck.merge.out_channels;

  model.heatmap.validate();
  expect(
    model.heatmap.in_channels == ce && model.heatmap.out_channels == cfg.classes && model.heatmap.stride == 1 &&
      model.heatmap.kernel_size == 3 && model.heatmap.padding == 1,
    fmt::format("heatmap is {}, expected {}->{} k3 s1", conv_desc(model.heatmap), ce, cfg.classes));

  expect(
    model.queries.dims() == std::vector<std::size_t>{object_decoder::kRoiCells, ce},
    fmt::format("decoder.queries is {}, expected [49, {}]", nn::dims_to_string(model.queries.dims()), ce));
  model.depth_mlp.validate();
  expect(
    model.depth_mlp.in_width() == cfg.depth_bins && model.depth_mlp.out_width() == ci,
    fmt::format("depth MLP maps {} -> {}, expected {} -> {}", model.depth_mlp.in_width(), model.depth_mlp.out_width(),
                cfg.depth_bins, ci));
  model.attention.validate();
  expect(
    model.attention.embed_width == ce && model.attention.feature_width == ci &&
      model.attention.heights == cfg.ref_heights.size() && model.attention.samples == cfg.attn_samples,
    "attention widths differ from config");
  model.heads.validate(ce);
}

PipelineResult run_pipeline(const SyntheticScene & scene, const SceneConfig & cfg, const Model & model)
{
  stage("contract", [&] { check_shape_contract(cfg, model, scene); });

  const auto rig = cfg.rig();
  const auto bins = cfg.bins();
  const auto bev = cfg.bev();
  const auto crf = cfg.crf();
  const std::size_t n = cfg.feature_stride();
  const std::size_t fh = cfg.feature_height();
  const std::size_t fw = cfg.feature_width();
  const std::size_t cams = rig.size();

  const auto index = stage("view_transform", [&] {
    std::vector<view_transform::FrustumGrid> frusta;
    for (const auto & cam : rig) {
      frusta.push_back(view_transform::build_frustum(cam, fh, fw, n, bins));
    }
    return view_transform::precompute_pool_index(frusta, bev);
  });

  PipelineResult result;
  res2fusion::FusionStack stack;
  for (std::size_t f = 0; f < scene.frames.size(); ++f) {
    const auto & frame = scene.frames[f];
    std::vector<nn::Tensor> features(cams);
    std::vector<depth_crf::DepthVolume> depth(cams);
    std::vector<nn::Tensor> lifted(cams);
    parallel_for(0, cams, [&](std::size_t c) {
      features[c] = stage("backbone", [&] { return toy_backbone(frame.images[c], n, model.backbone); });
      const auto logits = stage("depth_head", [&] { return nn::conv2d(features[c], model.depth_head); });
      depth[c] = stage("depth_crf", [&] { return depth_crf::modulate(logits, frame.images[c], bins, crf, c); });
      lifted[c] = stage("lift", [&] {
        return view_transform::lift(nn::conv2d(features[c], model.context_head), depth[c]);
      });
    });
    stack.frames.push_back(stage("pool", [&] { return view_transform::pool(lifted, index, bev); }));
    if (f + 1 == scene.frames.size()) {
      result.features = std::move(features);
      result.depth = std::move(depth);
      for (std::size_t c = 0; c < cams; ++c) {
        result.coverage.push_back(project_depth_labels(frame.points, rig[c], fh, fw, n, bins).coverage);
      }
    }
  }

  result.fused = stage("res2fusion", [&] { return res2fusion::fuse(stack, model.fusion); });
  result.encoded = stage("neck", [&] { return res2fusion::encode_neck(result.fused, model.neck); });
  result.bev_frames = std::move(stack.frames);

  result.heatmap = stage("heatmap", [&] { return object_decoder::compute_heatmap(result.encoded, model.heatmap); });
  result.centers = stage("centers", [&] {
    return object_decoder::select_centers(result.heatmap, cfg.threshold, cfg.top_n);
  });
  const auto rois = stage("roi", [&] {
    return object_decoder::expand_roi(result.encoded, result.centers, model.queries);
  });
  const auto refs = stage("references", [&] {
    return object_decoder::lift_references(rois, bev, cfg.ref_heights, rig);
  });
  std::vector<nn::Tensor> embeddings;
  if (cfg.depth_embedding) {
    embeddings.resize(cams);
    stage("depth_embedding", [&] {
      parallel_for(0, cams, [&](std::size_t c) {
        embeddings[c] = object_decoder::depth_embedding(result.depth[c], model.depth_mlp);
      });
    });
  }
  const auto refined = stage("attention", [&] {
    return object_decoder::spatial_cross_attention(rois, refs, result.features, embeddings, n, model.attention);
  });
  result.detections = stage("regression", [&] { return object_decoder::regress(refined, model.heads, bev); });
  return result;
}

}  // namespace bevnext::pipeline
