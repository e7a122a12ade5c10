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

#include "bevnext/pipeline/weights.hpp"

#include <fmt/format.h>

#include "bevnext/common/error.hpp"
#include "bevnext/nn/tensor_io.hpp"

namespace bevnext::pipeline
{

bool bit_equal(const WeightBundle & a, const WeightBundle & b)
{
  if (a.tensors.size() != b.tensors.size()) {
    return false;
  }
  for (auto ia = a.tensors.begin(), ib = b.tensors.begin(); ia != a.tensors.end(); ++ia, ++ib) {
    if (ia->first != ib->first || !nn::bit_equal(ia->second, ib->second)) {
      return false;
    }
  }
  return true;
}

void save_weights(const WeightBundle & bundle, const std::filesystem::path & path)
{
  nn::Container container;
  for (const auto & [name, tensor] : bundle.tensors) {
    container.emplace(name, tensor);
  }
  nn::save_container(path, container);
}

WeightBundle load_weights(const std::filesystem::path & path)
{
  WeightBundle bundle;
  for (auto & [name, entry] : nn::load_container(path)) {
    auto * tensor = std::get_if<nn::Tensor>(&entry);
    if (tensor == nullptr) {
      throw FormatError(fmt::format("weights: entry '{}' is an index array, expected f32", name));
    }
    bundle.tensors.emplace(name, std::move(*tensor));
  }
  return bundle;
}

void check_bundle(const WeightBundle & bundle, const std::map<std::string, std::vector<std::size_t>> & expected)
{
  std::vector<std::string> missing;
  std::vector<std::string> unknown;
  std::vector<std::string> mismatched;
  for (const auto & [name, dims] : expected) {
    auto it = bundle.tensors.find(name);
    if (it == bundle.tensors.end()) {
      missing.push_back(name);
    } else if (it->second.dims() != dims) {
      mismatched.push_back(fmt::format(
        "{} is {}, expected {}", name, nn::dims_to_string(it->second.dims()), nn::dims_to_string(dims)));
    }
  }
  for (const auto & [name, tensor] : bundle.tensors) {
    if (expected.count(name) == 0) {
      unknown.push_back(name);
    }
  }
  if (missing.empty() && unknown.empty() && mismatched.empty()) {
    return;
  }
  std::string msg = "weights: bundle does not match the model";
  if (!missing.empty()) {
    msg += fmt::format("\n  missing: {}", fmt::join(missing, ", "));
  }
  if (!mismatched.empty()) {
    msg += fmt::format("\n  shape mismatch: {}", fmt::join(mismatched, "; "));
  }
  if (!unknown.empty()) {
    std::vector<std::string> names;
    for (const auto & [name, dims] : expected) {
      names.push_back(name);
    }
    msg += fmt::format("\n  unknown: {}\n  expected names: {}", fmt::join(unknown, ", "), fmt::join(names, ", "));
  }
  throw ShapeError(msg);
}

}  // namespace bevnext::pipeline
