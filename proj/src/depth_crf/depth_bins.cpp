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

#include "bevnext/depth_crf/depth_bins.hpp"

#include <cmath>
#include <string>

#include "bevnext/common/error.hpp"

namespace bevnext::depth_crf
{

DepthBins DepthBins::uniform(std::size_t count, double d_min, double d_max)
{
  DepthBins bins;
  bins.d_min = d_min;
  bins.d_max = d_max;
  const double step = (d_max - d_min) / static_cast<double>(count);
  bins.centers.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    bins.centers[k] = d_min + (static_cast<double>(k) + 0.5) * step;
  }
  bins.validate();
  return bins;
}

void DepthBins::validate() const
{
  if (centers.size() < 2) {
    throw ConfigError("depth bins: need at least 2 bins, got " + std::to_string(centers.size()));
  }
  if (!(d_min < d_max) || !(d_min > 0.0)) {
    throw ConfigError("depth bins: range must satisfy 0 < d_min < d_max");
  }
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (centers[k] < d_min || centers[k] > d_max) {
      throw ConfigError("depth bins: centre " + std::to_string(k) + " outside [d_min, d_max]");
    }
    if (k > 0 && !(centers[k] > centers[k - 1])) {
      throw ConfigError("depth bins: centres must be strictly ascending");
    }
  }
}

std::size_t DepthBins::nearest(double depth) const
{
  std::size_t best = 0;
  double best_dist = std::abs(depth - centers[0]);
  for (std::size_t k = 1; k < centers.size(); ++k) {
    const double dist = std::abs(depth - centers[k]);
    if (dist < best_dist) {
      best = k;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace bevnext::depth_crf
