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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bevnext/nn/tensor.hpp"

namespace bevnext::pipeline
{

/// Named parameter tensors keyed by dotted path, e.g. "backbone.0.weight".
struct WeightBundle
{
  std::map<std::string, nn::Tensor> tensors;

  bool contains(const std::string & name) const { return tensors.count(name) != 0; }
};

bool bit_equal(const WeightBundle & a, const WeightBundle & b);

/// Writes the bundle as a BVNX container; names are stored sorted.
void save_weights(const WeightBundle & bundle, const std::filesystem::path & path);

/// Throws FormatError on truncation, bad magic, version mismatch or a
/// non-float entry.
WeightBundle load_weights(const std::filesystem::path & path);

/// Checks the bundle against an expected name -> dims table. Missing names,
/// unknown names and shape mismatches throw ShapeError; the message lists
/// the offending dotted paths and, for unknown names, every expected name.
void check_bundle(const WeightBundle & bundle, const std::map<std::string, std::vector<std::size_t>> & expected);

}  // namespace bevnext::pipeline
