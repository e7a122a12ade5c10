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
#include <string>
#include <vector>

#include "bevnext/depth_crf/depth_crf.hpp"
#include "bevnext/nn/tensor.hpp"
#include "bevnext/object_decoder/object_decoder.hpp"
#include "bevnext/pipeline/config.hpp"
#include "bevnext/pipeline/model.hpp"
#include "bevnext/pipeline/scene.hpp"

namespace bevnext::pipeline
{

struct PipelineResult
{
  std::vector<object_decoder::Detection> detections;
  std::vector<depth_crf::DepthVolume> depth;  // current frame, one per camera
  std::vector<nn::Tensor> features;           // current frame backbone output per camera
  std::vector<nn::Tensor> bev_frames;         // pooled BEV grid per frame
  nn::Tensor fused;
  nn::Tensor encoded;
  nn::Tensor heatmap;
  std::vector<object_decoder::Center> centers;
  std::vector<double> coverage;  // current frame, one per camera
};

/// Checks every inter-module dimension against config arithmetic before any
/// compute. Throws ShapeError naming the first broken contract.
void check_shape_contract(const SceneConfig & cfg, const Model & model, const SyntheticScene & scene);

/// Per frame: backbone, depth logits, CRF modulation, lift and pool; then
/// temporal fusion over all frames and the object decoder on the last one.
/// Errors are rethrown with the failing stage as a "[stage]" prefix.
PipelineResult run_pipeline(const SyntheticScene & scene, const SceneConfig & cfg, const Model & model);

}  // namespace bevnext::pipeline
