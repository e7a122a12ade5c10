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

#include "bevnext/depth_crf/depth_crf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"
#include "bevnext/nn/kernels.hpp"

namespace bevnext::depth_crf
{

namespace
{

constexpr double kUnaryEpsilon = 1e-12;

}  // namespace

void DepthVolume::validate(double tol) const
{
  if (probs.size() != pixels() * bins) {
    throw ShapeError("depth volume: payload size does not match dims");
  }
  for (std::size_t i = 0; i < pixels(); ++i) {
    double total = 0.0;
    for (double p : pixel(i)) {
      if (!(p >= 0.0)) {
        throw ShapeError("depth volume: negative or NaN probability at pixel " + std::to_string(i));
      }
      total += p;
    }
    if (std::abs(total - 1.0) > tol) {
      throw ShapeError("depth volume: pixel " + std::to_string(i) + " sums to " + std::to_string(total));
    }
  }
}

CrfParams CrfParams::defaults()
{
  CrfParams p;
  p.kernels = {{1.0, 0.1, KernelKind::kAppearance}, {0.3, 3.0, KernelKind::kSpatial}};
  p.iterations = 5;
  p.window_radius = 0;
  return p;
}

void CrfParams::validate() const
{
  if (kernels.empty()) {
    throw ConfigError("crf: at least one kernel is required");
  }
  for (const auto & k : kernels) {
    if (!(k.weight >= 0.0) || !std::isfinite(k.weight)) {
      throw ConfigError("crf: kernel weights must be finite and >= 0");
    }
    if (!(k.theta > 0.0) || !std::isfinite(k.theta)) {
      throw ConfigError("crf: kernel bandwidth theta must be > 0");
    }
  }
  if (iterations > kMaxCrfIterations) {
    throw ConfigError("crf: iterations above limit " + std::to_string(kMaxCrfIterations));
  }
  if (window_radius > kMaxWindowRadius) {
    throw ConfigError("crf: window radius above limit " + std::to_string(kMaxWindowRadius));
  }
}

UnaryPotentials UnaryPotentials::from_probabilities(const DepthVolume & q)
{
  UnaryPotentials u{q.pixels(), q.bins, std::vector<double>(q.probs.size())};
  for (std::size_t i = 0; i < q.probs.size(); ++i) {
    u.cost[i] = -std::log(q.probs[i] + kUnaryEpsilon);
  }
  return u;
}

PatchColorMap patch_colors(const RgbImage & image, std::size_t stride)
{
  if (stride == 0) {
    throw ShapeError("patch_colors: stride must be positive");
  }
  if (image.height % stride != 0 || image.width % stride != 0) {
    throw ShapeError(
      "patch_colors: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
      " is not divisible by stride " + std::to_string(stride) +
      "; crop the image to a multiple of the stride first");
  }
  PatchColorMap map;
  map.height = image.height / stride;
  map.width = image.width / stride;
  map.colors.resize(map.height * map.width);
  const double area = static_cast<double>(stride * stride);
  for (std::size_t py = 0; py < map.height; ++py) {
    for (std::size_t px = 0; px < map.width; ++px) {
      std::array<double, 3> sum{0.0, 0.0, 0.0};
      for (std::size_t y = py * stride; y < (py + 1) * stride; ++y) {
        for (std::size_t x = px * stride; x < (px + 1) * stride; ++x) {
          for (std::size_t c = 0; c < 3; ++c) {
            sum[c] += image.at(y, x, c);
          }
        }
      }
      for (auto & s : sum) {
        s /= area;
      }
      map.colors[py * map.width + px] = sum;
    }
  }
  return map;
}

CompatMatrix build_compat(const DepthBins & bins)
{
  bins.validate();
  const std::size_t k = bins.count();
  CompatMatrix m{k, std::vector<double>(k * k)};
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      m.values[a * k + b] = a == b ? 0.0 : std::abs(bins.centers[a] - bins.centers[b]);
    }
  }
  return m;
}

AffinityField::AffinityField(const PatchColorMap & colors, const CrfParams & params)
: height_(colors.height),
  width_(colors.width),
  radius_(params.window_radius),
  colors_(colors.colors),
  kernels_(params.kernels)
{
  params.validate();
  if (colors_.size() != height_ * width_) {
    throw ShapeError("affinity: colour map payload does not match its dims");
  }
  const std::size_t n = pixels();
  row_start_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto yi = static_cast<std::ptrdiff_t>(i / width_);
    const auto xi = static_cast<std::ptrdiff_t>(i % width_);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        continue;
      }
      if (radius_ > 0) {
        const auto yj = static_cast<std::ptrdiff_t>(j / width_);
        const auto xj = static_cast<std::ptrdiff_t>(j % width_);
        const auto cheb = static_cast<std::size_t>(std::max(std::abs(yi - yj), std::abs(xi - xj)));
        if (cheb > radius_) {
          continue;
        }
      }
      cols_.push_back(static_cast<std::uint32_t>(j));
      values_.push_back(evaluate(i, j));
    }
    row_start_[i + 1] = cols_.size();
  }
}

double AffinityField::evaluate(std::size_t i, std::size_t j) const
{
  double total = 0.0;
  for (const auto & k : kernels_) {
    double dist2 = 0.0;
    if (k.kind == KernelKind::kAppearance) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = colors_[i][c] - colors_[j][c];
        dist2 += d * d;
      }
    } else {
      const double dy = static_cast<double>(i / width_) - static_cast<double>(j / width_);
      const double dx = static_cast<double>(i % width_) - static_cast<double>(j % width_);
      dist2 = dx * dx + dy * dy;
    }
    total += k.weight * std::exp(-dist2 / (2.0 * k.theta * k.theta));
  }
  return total;
}

double AffinityField::operator()(std::size_t i, std::size_t j) const
{
  if (radius_ > 0 && i != j) {
    const auto dy = std::abs(static_cast<std::ptrdiff_t>(i / width_) - static_cast<std::ptrdiff_t>(j / width_));
    const auto dx = std::abs(static_cast<std::ptrdiff_t>(i % width_) - static_cast<std::ptrdiff_t>(j % width_));
    if (static_cast<std::size_t>(std::max(dy, dx)) > radius_) {
      return 0.0;
    }
  }
  return evaluate(i, j);
}

std::span<const std::uint32_t> AffinityField::neighbours(std::size_t i) const
{
  return {cols_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
}

std::span<const double> AffinityField::weights(std::size_t i) const
{
  return {values_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
}

AffinityField pairwise_affinity(const PatchColorMap & colors, const CrfParams & params)
{
  return AffinityField(colors, params);
}

double crf_energy(
  std::span<const std::uint32_t> labels, const UnaryPotentials & unary, const AffinityField & affinity,
  const CompatMatrix & compat)
{
  if (labels.size() != unary.pixels || labels.size() != affinity.pixels()) {
    throw ShapeError("crf_energy: label count does not match the unary/affinity pixel count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= unary.bins) {
      throw Error(
        "crf_energy: label " + std::to_string(labels[i]) + " at pixel " + std::to_string(i) +
        " out of range [0, " + std::to_string(unary.bins) + ")");
    }
  }
  double energy = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    energy += unary(i, labels[i]);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto nbrs = affinity.neighbours(i);
    const auto w = affinity.weights(i);
    for (std::size_t n = 0; n < nbrs.size(); ++n) {
      energy += w[n] * compat(labels[i], labels[nbrs[n]]);
    }
  }
  return energy;
}

DepthVolume mean_field_step(
  const DepthVolume & q, const UnaryPotentials & unary, const AffinityField & affinity,
  const CompatMatrix & compat)
{
  const std::size_t n = q.pixels();
  const std::size_t k = q.bins;
  if (unary.pixels != n || unary.bins != k || affinity.pixels() != n || compat.bins != k) {
    throw ShapeError("mean_field_step: volume, unary, affinity and compatibility dims disagree");
  }
  DepthVolume next(q.camera, q.height, q.width, k);
  parallel_for(0, n, [&](std::size_t i) {
    std::vector<double> message(k, 0.0);
    const auto nbrs = affinity.neighbours(i);
    const auto w = affinity.weights(i);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      const auto qj = q.pixel(nbrs[e]);
      for (std::size_t b = 0; b < k; ++b) {
        message[b] += w[e] * qj[b];
      }
    }
    auto out = next.pixel(i);
    for (std::size_t a = 0; a < k; ++a) {
      double pairwise = 0.0;
      for (std::size_t b = 0; b < k; ++b) {
        pairwise += compat(a, b) * message[b];
      }
      out[a] = -unary(i, a) - pairwise;
    }
    nn::softmax_inplace(out);
  });
  return next;
}

DepthVolume softmax_depth(const nn::Tensor & logits, std::size_t camera)
{
  if (logits.rank() != 3) {
    throw ShapeError("depth logits must be [K, H', W'], got " + nn::dims_to_string(logits.dims()));
  }
  const std::size_t k = logits.dim(0);
  const std::size_t h = logits.dim(1);
  const std::size_t w = logits.dim(2);
  DepthVolume q(camera, h, w, k);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      auto p = q.pixel(y * w + x);
      for (std::size_t b = 0; b < k; ++b) {
        p[b] = logits.at(b, y, x);
      }
      nn::softmax_inplace(p);
    }
  }
  return q;
}

DepthVolume modulate(
  const nn::Tensor & logits, const RgbImage & image, const DepthBins & bins, const CrfParams & params,
  std::size_t camera)
{
  params.validate();
  DepthVolume q = softmax_depth(logits, camera);
  if (q.bins != bins.count()) {
    throw ShapeError(
      "modulate: logits bin axis is " + std::to_string(q.bins) + ", depth bins define " +
      std::to_string(bins.count()));
  }
  if (image.height % q.height != 0 || image.width % q.width != 0 ||
      image.height / q.height != image.width / q.width) {
    throw ShapeError(
      "modulate: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
      " is not a uniform stride multiple of the " + std::to_string(q.height) + "x" +
      std::to_string(q.width) + " logits grid");
  }
  if (params.iterations == 0) {
    return q;
  }
  const std::size_t stride = image.height / q.height;
  const auto unary = UnaryPotentials::from_probabilities(q);
  const auto affinity = pairwise_affinity(patch_colors(image, stride), params);
  const auto compat = build_compat(bins);
  for (std::size_t t = 0; t < params.iterations; ++t) {
    q = mean_field_step(q, unary, affinity, compat);
  }
  return q;
}

LabelRaster map_labeling(const DepthVolume & q)
{
  LabelRaster raster{q.height, q.width, std::vector<std::uint32_t>(q.pixels())};
  for (std::size_t i = 0; i < q.pixels(); ++i) {
    const auto p = q.pixel(i);
    std::size_t best = 0;
    for (std::size_t b = 1; b < p.size(); ++b) {
      if (p[b] > p[best]) {
        best = b;
      }
    }
    raster.labels[i] = static_cast<std::uint32_t>(best);
  }
  return raster;
}

RgbImage render_labels(const LabelRaster & labels, std::size_t bins)
{
  RgbImage image(labels.height, labels.width);
  const double scale = bins > 1 ? 1.0 / static_cast<double>(bins - 1) : 0.0;
  for (std::size_t y = 0; y < labels.height; ++y) {
    for (std::size_t x = 0; x < labels.width; ++x) {
      const auto rgb = colormap(labels.labels[y * labels.width + x] * scale);
      for (std::size_t c = 0; c < 3; ++c) {
        image.at(y, x, c) = rgb[c];
      }
    }
  }
  return image;
}

}  // namespace bevnext::depth_crf
