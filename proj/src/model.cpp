// Copyright 2026 The SPML Lab Authors. All Rights Reserved.
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

#include <bit>
#include <cstring>
#include <fstream>

#include "spml/model.hpp"

namespace spml {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'M', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::istream& is, int bytes, const std::string& path) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == EOF) throw ParseError(path + ": truncated checkpoint");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void save_checkpoint(const Mlp<double>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write checkpoint " + path);
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kFormatVersion);
  put_u32(os, 4);
  model.parameters().for_each([&](const char* name, const auto& t) {
    const auto len = static_cast<std::uint32_t>(std::strlen(name));
    put_u32(os, len);
    os.write(name, len);
    put_u64(os, static_cast<std::uint64_t>(t.rows()));
    put_u64(os, static_cast<std::uint64_t>(t.cols()));
    for (Index i = 0; i < t.rows(); ++i)
      for (Index j = 0; j < t.cols(); ++j) put_u64(os, std::bit_cast<std::uint64_t>(t(i, j)));
  });
  if (!os) throw DataError("failed writing checkpoint " + path);
}

Mlp<double> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw ParseError(path + ": not a checkpoint file");
  const auto version = get_le(is, 4, path);
  if (version != kFormatVersion)
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
  const auto count = get_le(is, 4, path);
  MlpParameters<double> params;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get_le(is, 4, path);
    if (len > 64) throw ParseError(path + ": tensor name too long");
    std::string name(len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(len)))
      throw ParseError(path + ": truncated checkpoint");
    const auto rows = static_cast<Index>(get_le(is, 8, path));
    const auto cols = static_cast<Index>(get_le(is, 8, path));
    MatrixXd t(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) t(i, j) = std::bit_cast<double>(get_le(is, 8, path));
    if (name == "w1") {
      params.w1 = std::move(t);
    } else if (name == "w2") {
      params.w2 = std::move(t);
    } else if (name == "b1" || name == "b2") {
      if (cols != 1 && rows * cols != 0) throw ParseError(path + ": bias " + name + " is not a vector");
      VectorXd v = t.reshaped();
      (name == "b1" ? params.b1 : params.b2) = std::move(v);
    } else {
      throw ParseError(path + ": unknown tensor '" + name + "'");
    }
  }
  return Mlp<double>::from_parameters(std::move(params));
}

}  // namespace spml
