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
#include <map>
#include <string>
#include <vector>

#include "bevnext/common/image.hpp"
#include "bevnext/nn/kernels.hpp"
#include "bevnext/nn/tensor.hpp"
#include "bevnext/object_decoder/object_decoder.hpp"
#include "bevnext/pipeline/config.hpp"
#include "bevnext/pipeline/weights.hpp"
#include "bevnext/res2fusion/res2fusion.hpp"

namespace bevnext::pipeline
{

/// Every learned parameter of the desk-scale network.
struct Model
{
  std::array<nn::ConvSpec, 3> backbone;  // 3x3 strided convs, ReLU after each
  nn::ConvSpec depth_head;               // 1x1, image channels -> K logits
  nn::ConvSpec context_head;             // 1x1, image channels -> BEV channels
  res2fusion::FusionConfig fusion;
  res2fusion::NeckSpec neck;
  nn::ConvSpec heatmap;  // 3x3, neck channels -> classes
  nn::Tensor queries;    // [49, neck channels]
  nn::MlpSpec depth_mlp;
  object_decoder::AttnSpec attention;
  object_decoder::RegressionHeads heads;
};

/// Model with every shape fixed by the config and all parameters zero.
Model model_skeleton(const SceneConfig & cfg);

/// Expected dotted name -> dims for every parameter.
std::map<std::string, std::vector<std::size_t>> expected_weight_shapes(const SceneConfig & cfg);

WeightBundle model_to_bundle(const Model & model, const SceneConfig & cfg);

/// Throws ShapeError on missing, unknown or mis-shaped parameters.
Model model_from_bundle(const WeightBundle & bundle, const SceneConfig & cfg);

/// Seeded uniform init (bound sqrt(1 / fan_in)) plus one hand-wired channel that
/// carries colour saturation from the image through to the heatmap, so boxes
/// light up and a grey-only scene yields no proposals.
Model default_model(const SceneConfig & cfg);

/// Per-layer pre-pooling factor and strides of the toy backbone for stride n.
struct BackbonePlan
{
  std::size_t prepool = 1;
  std::array<std::size_t, 3> strides{2, 2, 2};
};
BackbonePlan backbone_plan(std::size_t stride);

nn::Tensor image_tensor(const RgbImage & image);

/// Three strided 3x3 convs with ReLU; output is [C, H / n, W / n].
nn::Tensor toy_backbone(const RgbImage & image, std::size_t stride, const std::array<nn::ConvSpec, 3> & convs);

}  // namespace bevnext::pipeline
