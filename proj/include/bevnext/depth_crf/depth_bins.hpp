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
#include <vector>

namespace bevnext::depth_crf
{

/// Discrete depth classes. Centres are in metres, strictly ascending and
/// contained in [d_min, d_max].
struct DepthBins
{
  std::vector<double> centers;
  double d_min = 0.0;
  double d_max = 0.0;

  /// K equal-width bins over [d_min, d_max]; centres sit at bin midpoints.
  static DepthBins uniform(std::size_t count, double d_min, double d_max);

  std::size_t count() const { return centers.size(); }
  void validate() const;

  /// Index of the closest centre (lower index on ties).
  std::size_t nearest(double depth) const;
};

}  // namespace bevnext::depth_crf
