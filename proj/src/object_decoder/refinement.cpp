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

#include <string>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"
#include "bevnext/object_decoder/object_decoder.hpp"

namespace bevnext::object_decoder
{

namespace
{

void require_dims(const nn::Tensor & t, const std::vector<std::size_t> & want, const char * name)
{
  if (t.dims() != want) {
    throw ShapeError(
      std::string("attention spec: ") + name + " is " + nn::dims_to_string(t.dims()) + ", expected " +
      nn::dims_to_string(want));
  }
}

// y = W x + b in double precision; W is [out, in].
void affine(const nn::Tensor & w, const nn::Tensor & b, std::span<const double> x, std::span<double> y)
{
  const std::size_t in = w.dim(1);
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    double acc = b[o];
    for (std::size_t i = 0; i < in; ++i) {
      acc += static_cast<double>(w.at(o, i)) * x[i];
    }
    y[o] = acc;
  }
}

}  // namespace

RefPointSet lift_references(
  const RoiSet & rois, const view_transform::BevSpec & spec, std::span<const double> heights,
  const view_transform::CameraRig & rig)
{
  spec.validate();
  for (const auto & cam : rig) {
    cam.validate();
  }
  RefPointSet refs;
  refs.rois = rois.rois.size();
  refs.heights = heights.size();
  refs.cameras = rig.size();
  refs.points.reserve(refs.rois * kRoiCells * refs.heights);
  refs.projections.reserve(refs.rois * kRoiCells * refs.heights * refs.cameras);
  for (const auto & roi : rois.rois) {
    for (std::size_t cell = 0; cell < kRoiCells; ++cell) {
      const auto col = static_cast<std::ptrdiff_t>(roi.center.x + cell % kRoiSide) - static_cast<std::ptrdiff_t>(kRoiHalf);
      const auto row = static_cast<std::ptrdiff_t>(roi.center.y + cell / kRoiSide) - static_cast<std::ptrdiff_t>(kRoiHalf);
      const Eigen::Vector2d xy = spec.cell_center(col, row);
      for (double z : heights) {
        const Eigen::Vector3d p(xy.x(), xy.y(), z);
        refs.points.push_back(p);
        for (const auto & cam : rig) {
          const auto proj = cam.project(p);
          refs.projections.push_back({proj.u, proj.v, cam.sees(proj)});
        }
      }
    }
  }
  return refs;
}

nn::Tensor depth_embedding(const depth_crf::DepthVolume & depth, const nn::MlpSpec & mlp)
{
  mlp.validate();
  if (mlp.in_width() != depth.bins) {
    throw ShapeError(
      "depth_embedding: MLP input width " + std::to_string(mlp.in_width()) + " differs from " +
      std::to_string(depth.bins) + " depth bins");
  }
  const std::size_t n = depth.pixels();
  std::vector<float> rows(depth.probs.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = static_cast<float>(depth.probs[i]);
  }
  const nn::Tensor per_pixel = nn::mlp_forward(nn::Tensor({n, depth.bins}, std::move(rows)), mlp);
  const std::size_t width = per_pixel.dim(1);
  nn::Tensor out({width, depth.height, depth.width});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < width; ++c) {
      out[c * n + i] = per_pixel.at(i, c);
    }
  }
  return out;
}

void AttnSpec::validate() const
{
  const std::size_t hs = heights * samples;
  if (embed_width == 0 || feature_width == 0 || heights == 0 || samples == 0) {
    throw ShapeError("attention spec: widths, heights and samples must be positive");
  }
  require_dims(offset_weight, {hs * 2, embed_width}, "offset_weight");
  require_dims(offset_bias, {hs * 2}, "offset_bias");
  require_dims(attn_weight, {hs, embed_width}, "attn_weight");
  require_dims(attn_bias, {hs}, "attn_bias");
  require_dims(value_weight, {embed_width, feature_width}, "value_weight");
  require_dims(value_bias, {embed_width}, "value_bias");
  require_dims(output_weight, {embed_width, embed_width}, "output_weight");
  require_dims(output_bias, {embed_width}, "output_bias");
}

QueryPlan plan_query(std::span<const float> query, const AttnSpec & spec)
{
  std::vector<double> q(query.begin(), query.end());
  QueryPlan plan;
  plan.offsets.resize(spec.heights * spec.samples * 2);
  plan.weights.resize(spec.heights * spec.samples);
  affine(spec.offset_weight, spec.offset_bias, q, plan.offsets);
  affine(spec.attn_weight, spec.attn_bias, q, plan.weights);
  for (std::size_t h = 0; h < spec.heights; ++h) {
    nn::softmax_inplace(std::span<double>(plan.weights.data() + h * spec.samples, spec.samples));
  }
  return plan;
}

RoiSet spatial_cross_attention(
  const RoiSet & rois, const RefPointSet & refs, std::span<const nn::Tensor> features,
  std::span<const nn::Tensor> embeddings, std::size_t stride, const AttnSpec & spec)
{
  spec.validate();
  const std::size_t c = spec.embed_width;
  if (rois.queries.dims() != std::vector<std::size_t>{kRoiCells, c}) {
    throw ShapeError("spatial_cross_attention: queries must be [49, embed_width]");
  }
  if (refs.rois != rois.rois.size() || refs.heights != spec.heights || refs.cameras != features.size()) {
    throw ShapeError("spatial_cross_attention: reference points were computed for different ROIs/heights/cameras");
  }
  if (!embeddings.empty() && embeddings.size() != features.size()) {
    throw ShapeError("spatial_cross_attention: need one depth embedding per camera");
  }
  std::vector<nn::Tensor> maps;
  maps.reserve(features.size());
  for (std::size_t cam = 0; cam < features.size(); ++cam) {
    if (features[cam].rank() != 3 || features[cam].dim(0) != spec.feature_width) {
      throw ShapeError(
        "spatial_cross_attention: camera " + std::to_string(cam) + " features are " +
        nn::dims_to_string(features[cam].dims()) + ", channel axis must be " + std::to_string(spec.feature_width));
    }
    maps.push_back(embeddings.empty() ? features[cam] : nn::add(features[cam], embeddings[cam]));
  }

  RoiSet out = rois;
  parallel_for(0, out.rois.size(), [&](std::size_t r) {
    auto & roi = out.rois[r];
    const auto & source = rois.rois[r].patch;
    std::vector<float> query(c);
    std::vector<float> sample(spec.feature_width);
    std::vector<double> sample_d(spec.feature_width);
    std::vector<double> value(c);
    std::vector<double> acc(c);
    std::vector<double> projected(c);
    for (std::size_t cell = 0; cell < kRoiCells; ++cell) {
      const std::size_t dy = cell / kRoiSide;
      const std::size_t dx = cell % kRoiSide;
      for (std::size_t ch = 0; ch < c; ++ch) {
        query[ch] = source.at(ch, dy, dx) + rois.queries.at(cell, ch);
      }
      const QueryPlan plan = plan_query(query, spec);
      std::fill(acc.begin(), acc.end(), 0.0);
      bool any_valid = false;
      for (std::size_t cam = 0; cam < maps.size(); ++cam) {
        for (std::size_t h = 0; h < spec.heights; ++h) {
          const auto & ref = refs.projection(r, cell, h, cam);
          if (!ref.valid) {
            continue;
          }
          any_valid = true;
          const double base_x = view_transform::image_to_feature(ref.u, stride);
          const double base_y = view_transform::image_to_feature(ref.v, stride);
          for (std::size_t s = 0; s < spec.samples; ++s) {
            const std::size_t hs = h * spec.samples + s;
            const double x = base_x + plan.offsets[hs * 2];
            const double y = base_y + plan.offsets[hs * 2 + 1];
            if (!nn::bilinear_sample_into(maps[cam], x, y, sample)) {
              continue;
            }
            std::copy(sample.begin(), sample.end(), sample_d.begin());
            affine(spec.value_weight, spec.value_bias, sample_d, value);
            for (std::size_t ch = 0; ch < c; ++ch) {
              acc[ch] += plan.weights[hs] * value[ch];
            }
          }
        }
      }
      if (!any_valid) {
        roi.refined[cell] = false;
        continue;
      }
      affine(spec.output_weight, spec.output_bias, acc, projected);
      for (std::size_t ch = 0; ch < c; ++ch) {
        roi.patch.at(ch, dy, dx) = static_cast<float>(static_cast<double>(source.at(ch, dy, dx)) + projected[ch]);
      }
      roi.refined[cell] = true;
    }
  });
  return out;
}

}  // namespace bevnext::object_decoder
