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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "bevnext/nn/tensor.hpp"

namespace bevnext::nn
{

// BVNX layout, all integers little-endian:
//
//   single tensor:  "BVNX" | u16 version | u16 rank (1..4) | u32 dims[rank] | f32 payload
//   container:      "BVNX" | u16 version | u16 0            | u32 entry count | entries...
//   container entry: u16 name length | name bytes | u8 dtype (0 = f32, 1 = u32)
//                    | u16 rank | u32 dims[rank] | payload
//
// Container entries are written in name order.

inline constexpr std::uint16_t kFormatVersion = 1;

struct IndexArray
{
  std::vector<std::size_t> dims;
  std::vector<std::uint32_t> data;
};

using ContainerEntry = std::variant<Tensor, IndexArray>;
using Container = std::map<std::string, ContainerEntry>;

void write_tensor(std::ostream & out, const Tensor & tensor);
Tensor read_tensor(std::istream & in);

void save_tensor(const std::filesystem::path & path, const Tensor & tensor);
Tensor load_tensor(const std::filesystem::path & path);

void write_container(std::ostream & out, const Container & container);
Container read_container(std::istream & in);

void save_container(const std::filesystem::path & path, const Container & container);
Container load_container(const std::filesystem::path & path);

}  // namespace bevnext::nn
