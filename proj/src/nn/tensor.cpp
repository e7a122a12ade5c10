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

#include "bevnext/nn/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "bevnext/common/error.hpp"

namespace bevnext::nn
{

namespace
{

std::size_t element_count(const std::vector<std::size_t> & dims)
{
  if (dims.empty() || dims.size() > 4) {
    throw ShapeError("tensor rank must be 1..4, got " + std::to_string(dims.size()));
  }
  for (std::size_t axis = 0; axis < dims.size(); ++axis) {
    if (dims[axis] == 0) {
      throw ShapeError("tensor axis " + std::to_string(axis) + " has zero extent");
    }
  }
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, float fill)
: dims_(std::move(dims)), data_(element_count(dims_), fill)
{
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data)
: dims_(std::move(dims)), data_(std::move(data))
{
  const std::size_t expected = element_count(dims_);
  if (data_.size() != expected) {
    throw ShapeError(
      "tensor payload has " + std::to_string(data_.size()) + " values, dims " +
      dims_to_string(dims_) + " need " + std::to_string(expected));
  }
}

std::size_t Tensor::dim(std::size_t axis) const
{
  if (axis >= dims_.size()) {
    throw ShapeError(
      "axis " + std::to_string(axis) + " out of range for rank " + std::to_string(dims_.size()));
  }
  return dims_[axis];
}

Tensor Tensor::reshaped(std::vector<std::size_t> dims) const { return Tensor(std::move(dims), data_); }

void Tensor::require_finite(const std::string & what) const
{
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw FormatError(what + ": non-finite value at element " + std::to_string(i));
    }
  }
}

bool bit_equal(const Tensor & a, const Tensor & b)
{
  return a.dims() == b.dims() &&
         (a.size() == 0 ||
          std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0);
}

std::string dims_to_string(const std::vector<std::size_t> & dims)
{
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    out << (i ? "x" : "") << dims[i];
  }
  out << ']';
  return out.str();
}

}  // namespace bevnext::nn
