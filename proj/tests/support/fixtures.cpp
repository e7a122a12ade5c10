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

#include "fixtures.hpp"

#include <cmath>

#include "bevnext/common/rng.hpp"

namespace bevnext::fixture
{

TwoRegion two_region(std::uint64_t seed, std::size_t bins)
{
  Rng rng(seed);
  TwoRegion t;
  const std::size_t fh = 6;
  const std::size_t fw = 12;
  t.image = RgbImage(fh * t.stride, fw * t.stride);
  float colors[2][3];
  for (auto & c : colors) {
    for (auto & v : c) {
      v = static_cast<float>(rng.uniform(0.1, 0.9));
    }
  }
  // keep the regions clearly apart in colour
  for (std::size_t ch = 0; ch < 3; ++ch) {
    colors[1][ch] = colors[0][ch] > 0.5f ? colors[0][ch] - 0.4f : colors[0][ch] + 0.4f;
  }
  for (std::size_t y = 0; y < t.image.height; ++y) {
    for (std::size_t x = 0; x < t.image.width; ++x) {
      const int r = x < t.image.width / 2 ? 0 : 1;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        t.image.at(y, x, ch) = colors[r][ch] + static_cast<float>(rng.uniform(-0.02, 0.02));
      }
    }
  }
  std::vector<double> profile[2];
  for (auto & p : profile) {
    p.resize(bins);
    for (auto & v : p) {
      v = rng.uniform(-2.0, 2.0);
    }
  }
  t.logits = nn::Tensor({bins, fh, fw});
  t.region.resize(fh * fw);
  for (std::size_t y = 0; y < fh; ++y) {
    for (std::size_t x = 0; x < fw; ++x) {
      const int r = x < fw / 2 ? 0 : 1;
      t.region[y * fw + x] = r;
      for (std::size_t k = 0; k < bins; ++k) {
        t.logits.at(k, y, x) = static_cast<float>(profile[r][k] + rng.uniform(-1.5, 1.5));
      }
    }
  }
  return t;
}

double intra_region_spread(const depth_crf::DepthVolume & q, const std::vector<int> & region)
{
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < q.pixels(); ++i) {
    for (std::size_t j = i + 1; j < q.pixels(); ++j) {
      if (region[i] != region[j]) {
        continue;
      }
      double d = 0.0;
      for (std::size_t k = 0; k < q.bins; ++k) {
        d += std::abs(q.pixel(i)[k] - q.pixel(j)[k]);
      }
      total += d;
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

}  // namespace bevnext::fixture
