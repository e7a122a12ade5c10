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
#include <cstdint>
#include <filesystem>
#include <vector>

namespace bevnext
{

/// Interleaved RGB raster with channel values in [0, 1], row-major.
struct RgbImage
{
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> rgb;  // height * width * 3

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), rgb(h * w * 3, fill)
  {
  }

  float & at(std::size_t y, std::size_t x, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }
};

/// Binary PPM (P6, maxval 255). Reading maps bytes to k / 255.
RgbImage read_ppm(const std::filesystem::path & path);
void write_ppm(const std::filesystem::path & path, const RgbImage & image);

/// Rounds every channel to the nearest of the 256 levels a PPM can hold.
void quantize_to_8bit(RgbImage & image);

/// Maps t in [0, 1] onto a blue-cyan-yellow-red ramp.
std::array<float, 3> colormap(double t);

}  // namespace bevnext
