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
#include <span>
#include <string>
#include <vector>

namespace bevnext::nn
{

/// Dense float32 tensor of rank 1 to 4, row-major. Four dimensional
/// feature maps are laid out NCHW and three dimensional ones CHW.
/// A default-constructed tensor is empty (rank 0) and only useful as a
/// placeholder.
class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims, float fill = 0.0f);
  Tensor(std::vector<std::size_t> dims, std::vector<float> data);

  const std::vector<std::size_t> & dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float> & values() const { return data_; }

  float & operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float & at(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  float at(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }
  float & at(std::size_t c, std::size_t h, std::size_t w)
  {
    return data_[(c * dims_[1] + h) * dims_[2] + w];
  }
  float at(std::size_t c, std::size_t h, std::size_t w) const
  {
    return data_[(c * dims_[1] + h) * dims_[2] + w];
  }
  float & at(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
  {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }
  float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const
  {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }

  /// Same payload under new dims; the element count must match.
  Tensor reshaped(std::vector<std::size_t> dims) const;

  /// Throws FormatError if any element is NaN or infinite.
  void require_finite(const std::string & what) const;

private:
  std::vector<std::size_t> dims_;
  std::vector<float> data_;
};

/// True when dims match and every element has the same bit pattern.
bool bit_equal(const Tensor & a, const Tensor & b);

std::string dims_to_string(const std::vector<std::size_t> & dims);

}  // namespace bevnext::nn
