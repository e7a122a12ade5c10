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

#include "bevnext/common/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "bevnext/common/error.hpp"

namespace bevnext
{

namespace
{

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream & in)
{
  std::string token;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) {
        return token;
      }
      continue;
    }
    token.push_back(c);
  }
  return token;
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open image " + path.string());
  }
  if (next_token(in) != "P6") {
    throw FormatError(path.string() + ": not a binary PPM (expected magic P6 at offset 0)");
  }
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 0;
  try {
    width = std::stoul(next_token(in));
    height = std::stoul(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception &) {
    throw FormatError(path.string() + ": malformed PPM header");
  }
  if (width == 0 || height == 0 || maxval != 255) {
    throw FormatError(path.string() + ": unsupported PPM header (need maxval 255, nonzero dims)");
  }
  std::vector<unsigned char> bytes(width * height * 3);
  in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError(path.string() + ": truncated PPM payload");
  }
  RgbImage image(height, width);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    image.rgb[i] = static_cast<float>(bytes[i]) / 255.0f;
  }
  return image;
}

void write_ppm(const std::filesystem::path & path, const RgbImage & image)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write image " + path.string());
  }
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> bytes(image.rgb.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(image.rgb[i], 0.0f, 1.0f);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void quantize_to_8bit(RgbImage & image)
{
  for (auto & v : image.rgb) {
    const float level = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    v = level / 255.0f;
  }
}

std::array<float, 3> colormap(double t)
{
  t = std::clamp(t, 0.0, 1.0);
  // piecewise-linear ramp through blue, cyan, yellow, red
  constexpr std::array<std::array<double, 3>, 4> stops{{
    {0.1, 0.1, 0.8},
    {0.1, 0.8, 0.9},
    {0.95, 0.9, 0.1},
    {0.85, 0.1, 0.1},
  }};
  const double pos = t * 3.0;
  const auto seg = std::min<std::size_t>(2, static_cast<std::size_t>(pos));
  const double frac = pos - static_cast<double>(seg);
  std::array<float, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    out[c] = static_cast<float>(stops[seg][c] + (stops[seg + 1][c] - stops[seg][c]) * frac);
  }
  return out;
}

}  // namespace bevnext
