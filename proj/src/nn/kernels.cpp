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

#include "bevnext/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bevnext/common/error.hpp"
#include "bevnext/common/parallel.hpp"

namespace bevnext::nn
{

namespace
{

std::string axis_mismatch(const char * op, const char * axis, std::size_t got, std::size_t want)
{
  return std::string(op) + ": " + axis + " axis is " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

}  // namespace

void ConvSpec::validate() const
{
  if (kernel_size != 1 && kernel_size != 3) {
    throw ShapeError("conv spec: kernel_size must be 1 or 3, got " + std::to_string(kernel_size));
  }
  if (stride != 1 && stride != 2) {
    throw ShapeError("conv spec: stride must be 1 or 2, got " + std::to_string(stride));
  }
  const std::vector<std::size_t> want{out_channels, in_channels, kernel_size, kernel_size};
  if (weights.dims() != want) {
    throw ShapeError(
      "conv spec: weights are " + dims_to_string(weights.dims()) + ", expected " +
      dims_to_string(want));
  }
  if (bias.dims() != std::vector<std::size_t>{out_channels}) {
    throw ShapeError(
      "conv spec: bias is " + dims_to_string(bias.dims()) + ", expected [" +
      std::to_string(out_channels) + "]");
  }
}

void MlpSpec::validate() const
{
  if (layers.empty()) {
    throw ShapeError("mlp spec: no layers");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto & layer = layers[l];
    if (layer.weight.rank() != 2) {
      throw ShapeError("mlp spec: layer " + std::to_string(l) + " weight must be rank 2");
    }
    if (layer.bias.dims() != std::vector<std::size_t>{layer.weight.dim(0)}) {
      throw ShapeError("mlp spec: layer " + std::to_string(l) + " bias width mismatch");
    }
    if (l > 0 && layer.weight.dim(1) != layers[l - 1].weight.dim(0)) {
      throw ShapeError(
        "mlp spec: layer " + std::to_string(l) + " expects width " +
        std::to_string(layer.weight.dim(1)) + " but previous layer produces " +
        std::to_string(layers[l - 1].weight.dim(0)));
    }
  }
}

std::size_t MlpSpec::in_width() const { return layers.front().weight.dim(1); }
std::size_t MlpSpec::out_width() const { return layers.back().weight.dim(0); }

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t padding)
{
  return (extent + 2 * padding - kernel) / stride + 1;
}

Tensor conv2d(const Tensor & input, const ConvSpec & spec)
{
  spec.validate();
  const bool batched = input.rank() == 4;
  if (input.rank() != 3 && !batched) {
    throw ShapeError("conv2d: input must be CHW or NCHW, got " + dims_to_string(input.dims()));
  }
  const std::size_t off = batched ? 1 : 0;
  const std::size_t batch = batched ? input.dim(0) : 1;
  const std::size_t channels = input.dim(off);
  const std::size_t height = input.dim(off + 1);
  const std::size_t width = input.dim(off + 2);
  if (channels != spec.in_channels) {
    throw ShapeError(axis_mismatch("conv2d", "channel", channels, spec.in_channels));
  }
  const std::size_t k = spec.kernel_size;
  const std::size_t pad = spec.padding;
  if (height + 2 * pad < k) {
    throw ShapeError(axis_mismatch("conv2d", "height (padded)", height + 2 * pad, k));
  }
  if (width + 2 * pad < k) {
    throw ShapeError(axis_mismatch("conv2d", "width (padded)", width + 2 * pad, k));
  }
  const std::size_t out_h = conv_output_extent(height, k, spec.stride, pad);
  const std::size_t out_w = conv_output_extent(width, k, spec.stride, pad);
  const std::size_t out_c = spec.out_channels;

  Tensor output(
    batched ? std::vector<std::size_t>{batch, out_c, out_h, out_w}
            : std::vector<std::size_t>{out_c, out_h, out_w});
  const float * in = input.data().data();
  const float * w = spec.weights.data().data();
  float * out = output.data().data();

  parallel_for(0, batch * out_c, [&](std::size_t job) {
    const std::size_t n = job / out_c;
    const std::size_t oc = job % out_c;
    const float * in_n = in + n * channels * height * width;
    float * out_plane = out + (n * out_c + oc) * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = spec.bias[oc];
        for (std::size_t ic = 0; ic < channels; ++ic) {
          const float * in_plane = in_n + ic * height * width;
          const float * w_k = w + (oc * channels + ic) * k * k;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy =
              static_cast<std::ptrdiff_t>(oy * spec.stride + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) {
              continue;
            }
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * spec.stride + kx) - static_cast<std::ptrdiff_t>(pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width)) {
                continue;
              }
              acc += static_cast<double>(w_k[ky * k + kx]) *
                     static_cast<double>(in_plane[static_cast<std::size_t>(iy) * width + static_cast<std::size_t>(ix)]);
            }
          }
        }
        out_plane[oy * out_w + ox] = static_cast<float>(acc);
      }
    }
  });
  return output;
}

Tensor mlp_forward(const Tensor & input, const MlpSpec & spec)
{
  spec.validate();
  if (input.rank() == 0) {
    throw ShapeError("mlp_forward: empty input");
  }
  const std::size_t width = input.dims().back();
  if (width != spec.in_width()) {
    throw ShapeError(axis_mismatch("mlp_forward", "last", width, spec.in_width()));
  }
  const std::size_t rows = input.size() / width;

  std::vector<float> current(input.data().begin(), input.data().end());
  std::size_t cur_width = width;
  for (const auto & layer : spec.layers) {
    const std::size_t out_width = layer.weight.dim(0);
    std::vector<float> next(rows * out_width);
    for (std::size_t r = 0; r < rows; ++r) {
      const float * x = current.data() + r * cur_width;
      for (std::size_t o = 0; o < out_width; ++o) {
        double acc = layer.bias[o];
        const float * wrow = layer.weight.data().data() + o * cur_width;
        for (std::size_t i = 0; i < cur_width; ++i) {
          acc += static_cast<double>(wrow[i]) * static_cast<double>(x[i]);
        }
        float v = static_cast<float>(acc);
        if (layer.activation == Activation::kRelu && v < 0.0f) {
          v = 0.0f;
        }
        next[r * out_width + o] = v;
      }
    }
    current = std::move(next);
    cur_width = out_width;
  }
  std::vector<std::size_t> dims = input.dims();
  dims.back() = cur_width;
  return Tensor(std::move(dims), std::move(current));
}

void softmax_inplace(std::span<double> values)
{
  if (values.empty()) {
    return;
  }
  const double peak = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (auto & v : values) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto & v : values) {
    v /= total;
  }
}

Tensor softmax(const Tensor & input, std::size_t axis)
{
  if (axis >= input.rank()) {
    throw ShapeError(
      "softmax: axis " + std::to_string(axis) + " invalid for rank " + std::to_string(input.rank()));
  }
  const auto & dims = input.dims();
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) {
    outer *= dims[a];
  }
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < dims.size(); ++a) {
    inner *= dims[a];
  }
  const std::size_t len = dims[axis];
  Tensor output(dims);
  std::vector<double> scratch(len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      for (std::size_t k = 0; k < len; ++k) {
        scratch[k] = input[(o * len + k) * inner + i];
      }
      softmax_inplace(scratch);
      for (std::size_t k = 0; k < len; ++k) {
        output[(o * len + k) * inner + i] = static_cast<float>(scratch[k]);
      }
    }
  }
  return output;
}

void relu_inplace(Tensor & t)
{
  for (auto & v : t.data()) {
    v = v < 0.0f ? 0.0f : v;
  }
}

void sigmoid_inplace(Tensor & t)
{
  for (auto & v : t.data()) {
    v = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
  }
}

Tensor concat_channels(std::span<const Tensor> parts)
{
  if (parts.empty()) {
    throw ShapeError("concat_channels: nothing to concatenate");
  }
  const std::size_t h = parts.front().dim(1);
  const std::size_t w = parts.front().dim(2);
  std::size_t channels = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto & p = parts[i];
    if (p.rank() != 3 || p.dim(1) != h || p.dim(2) != w) {
      throw ShapeError(
        "concat_channels: part " + std::to_string(i) + " is " + dims_to_string(p.dims()) +
        ", spatial dims must be " + std::to_string(h) + "x" + std::to_string(w));
    }
    channels += p.dim(0);
  }
  std::vector<float> data;
  data.reserve(channels * h * w);
  for (const auto & p : parts) {
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Tensor({channels, h, w}, std::move(data));
}

Tensor add(const Tensor & a, const Tensor & b)
{
  if (a.dims() != b.dims()) {
    throw ShapeError("add: " + dims_to_string(a.dims()) + " vs " + dims_to_string(b.dims()));
  }
  Tensor out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] + b[i];
  }
  return out;
}

Tensor upsample2x(const Tensor & input)
{
  if (input.rank() != 3) {
    throw ShapeError("upsample2x: expected CHW, got " + dims_to_string(input.dims()));
  }
  const std::size_t c = input.dim(0);
  const std::size_t h = input.dim(1);
  const std::size_t w = input.dim(2);
  Tensor out({c, 2 * h, 2 * w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < 2 * h; ++y) {
      for (std::size_t x = 0; x < 2 * w; ++x) {
        out.at(ch, y, x) = input.at(ch, y / 2, x / 2);
      }
    }
  }
  return out;
}

bool bilinear_sample_into(const Tensor & map, double x, double y, std::span<float> out)
{
  const std::size_t channels = map.dim(0);
  const std::size_t height = map.dim(1);
  const std::size_t width = map.dim(2);
  const bool inside = std::isfinite(x) && std::isfinite(y) && x >= 0.0 && y >= 0.0 &&
                      x <= static_cast<double>(width - 1) && y <= static_cast<double>(height - 1);
  if (!inside) {
    std::fill(out.begin(), out.end(), 0.0f);
    return false;
  }
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const std::size_t x1 = std::min(x0 + 1, width - 1);
  const std::size_t y1 = std::min(y0 + 1, height - 1);
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w01 = fx * (1.0 - fy);
  const double w10 = (1.0 - fx) * fy;
  const double w11 = fx * fy;
  for (std::size_t c = 0; c < channels; ++c) {
    const double v = w00 * map.at(c, y0, x0) + w01 * map.at(c, y0, x1) + w10 * map.at(c, y1, x0) +
                     w11 * map.at(c, y1, x1);
    out[c] = static_cast<float>(v);
  }
  return true;
}

std::vector<Sample> bilinear_sample(const Tensor & map, std::span<const Point2> points)
{
  if (map.rank() != 3) {
    throw ShapeError("bilinear_sample: map must be CHW, got " + dims_to_string(map.dims()));
  }
  std::vector<Sample> samples(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    samples[i].values.resize(map.dim(0));
    samples[i].valid = bilinear_sample_into(map, points[i].x, points[i].y, samples[i].values);
  }
  return samples;
}

}  // namespace bevnext::nn
