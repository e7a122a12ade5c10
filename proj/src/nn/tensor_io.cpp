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

#include "bevnext/nn/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "bevnext/common/error.hpp"

namespace bevnext::nn
{

namespace
{

constexpr std::array<char, 4> kMagic{'B', 'V', 'N', 'X'};
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeU32 = 1;

class Writer
{
public:
  explicit Writer(std::ostream & out) : out_(out) {}

  void bytes(const void * data, std::size_t n)
  {
    out_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
  }

  template <typename T>
  void le(T value)
  {
    std::array<unsigned char, sizeof(T)> buf{};
    auto raw = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buf[i] = raw[std::endian::native == std::endian::little ? i : sizeof(T) - 1 - i];
    }
    bytes(buf.data(), buf.size());
  }

  void header(std::uint16_t rank)
  {
    bytes(kMagic.data(), kMagic.size());
    le<std::uint16_t>(kFormatVersion);
    le<std::uint16_t>(rank);
  }

  void dims(const std::vector<std::size_t> & dims)
  {
    for (auto d : dims) {
      le<std::uint32_t>(static_cast<std::uint32_t>(d));
    }
  }

private:
  std::ostream & out_;
};

class Reader
{
public:
  explicit Reader(std::istream & in) : in_(in) {}

  std::size_t offset() const { return offset_; }

  void bytes(void * data, std::size_t n, const char * what)
  {
    in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(
        std::string("truncated file: expected ") + what + " at offset " + std::to_string(offset_));
    }
    offset_ += n;
  }

  template <typename T>
  T le(const char * what)
  {
    std::array<unsigned char, sizeof(T)> buf{};
    bytes(buf.data(), buf.size(), what);
    if constexpr (std::endian::native != std::endian::little) {
      std::reverse(buf.begin(), buf.end());
    }
    return std::bit_cast<T>(buf);
  }

  std::uint16_t header()
  {
    std::array<char, 4> magic{};
    bytes(magic.data(), magic.size(), "magic");
    if (magic != kMagic) {
      throw FormatError("bad magic at offset 0: expected \"BVNX\"");
    }
    const auto version = le<std::uint16_t>("version");
    if (version != kFormatVersion) {
      throw FormatError(
        "format version mismatch at offset 4: file has " + std::to_string(version) +
        ", reader supports " + std::to_string(kFormatVersion));
    }
    return le<std::uint16_t>("rank");
  }

  std::vector<std::size_t> dims(std::uint16_t rank)
  {
    if (rank == 0 || rank > 4) {
      throw FormatError(
        "invalid rank " + std::to_string(rank) + " before offset " + std::to_string(offset_));
    }
    std::vector<std::size_t> dims(rank);
    for (auto & d : dims) {
      const std::size_t at = offset_;
      d = le<std::uint32_t>("dimension");
      if (d == 0) {
        throw FormatError("zero dimension at offset " + std::to_string(at));
      }
    }
    return dims;
  }

  Tensor tensor_payload(std::vector<std::size_t> dims, const std::string & what)
  {
    std::size_t count = 1;
    for (auto d : dims) {
      count *= d;
    }
    std::vector<float> data(count);
    for (auto & v : data) {
      v = le<float>("f32 payload");
    }
    Tensor t(std::move(dims), std::move(data));
    t.require_finite(what);
    return t;
  }

private:
  std::istream & in_;
  std::size_t offset_ = 0;
};

void write_payload(Writer & w, const Tensor & t)
{
  for (float v : t.data()) {
    w.le<float>(v);
  }
}

}  // namespace

void write_tensor(std::ostream & out, const Tensor & tensor)
{
  if (tensor.rank() == 0) {
    throw ShapeError("write_tensor: cannot serialize an empty tensor");
  }
  Writer w(out);
  w.header(static_cast<std::uint16_t>(tensor.rank()));
  w.dims(tensor.dims());
  write_payload(w, tensor);
}

Tensor read_tensor(std::istream & in)
{
  Reader r(in);
  const auto rank = r.header();
  if (rank == 0) {
    throw FormatError("expected a single tensor but found a container (rank 0 at offset 6)");
  }
  return r.tensor_payload(r.dims(rank), "tensor");
}

void save_tensor(const std::filesystem::path & path, const Tensor & tensor)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write " + path.string());
  }
  write_tensor(out, tensor);
}

Tensor load_tensor(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  try {
    return read_tensor(in);
  } catch (const FormatError & e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_container(std::ostream & out, const Container & container)
{
  Writer w(out);
  w.header(0);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(container.size()));
  for (const auto & [name, entry] : container) {
    w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    if (const auto * t = std::get_if<Tensor>(&entry)) {
      w.le<std::uint8_t>(kDtypeF32);
      w.le<std::uint16_t>(static_cast<std::uint16_t>(t->rank()));
      w.dims(t->dims());
      write_payload(w, *t);
    } else {
      const auto & a = std::get<IndexArray>(entry);
      w.le<std::uint8_t>(kDtypeU32);
      w.le<std::uint16_t>(static_cast<std::uint16_t>(a.dims.size()));
      w.dims(a.dims);
      for (auto v : a.data) {
        w.le<std::uint32_t>(v);
      }
    }
  }
}

Container read_container(std::istream & in)
{
  Reader r(in);
  if (r.header() != 0) {
    throw FormatError("expected a container (rank 0 at offset 6) but found a single tensor");
  }
  const auto count = r.le<std::uint32_t>("entry count");
  Container container;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = r.le<std::uint16_t>("name length");
    std::string name(name_len, '\0');
    r.bytes(name.data(), name.size(), "entry name");
    const std::size_t dtype_at = r.offset();
    const auto dtype = r.le<std::uint8_t>("dtype");
    const auto dims = r.dims(r.le<std::uint16_t>("rank"));
    ContainerEntry entry;
    if (dtype == kDtypeF32) {
      entry = r.tensor_payload(dims, name);
    } else if (dtype == kDtypeU32) {
      IndexArray a{dims, {}};
      std::size_t n = 1;
      for (auto d : dims) {
        n *= d;
      }
      a.data.resize(n);
      for (auto & v : a.data) {
        v = r.le<std::uint32_t>("u32 payload");
      }
      entry = std::move(a);
    } else {
      throw FormatError(
        "unknown dtype " + std::to_string(dtype) + " at offset " + std::to_string(dtype_at));
    }
    if (!container.emplace(name, std::move(entry)).second) {
      throw FormatError("duplicate entry name \"" + name + "\"");
    }
  }
  return container;
}

void save_container(const std::filesystem::path & path, const Container & container)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot write " + path.string());
  }
  write_container(out, container);
}

Container load_container(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  try {
    return read_container(in);
  } catch (const FormatError & e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace bevnext::nn
