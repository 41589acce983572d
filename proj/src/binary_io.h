// Copyright 2026 The xvgeo Authors. All rights reserved.
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

// Little-endian primitives for the binary file formats.

#ifndef XVGEO_SRC_BINARY_IO_H_
#define XVGEO_SRC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace xvgeo::internal {

template <typename UInt>
void WriteLE(std::ostream& out, UInt value) {
  char bytes[sizeof(UInt)];
  for (size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes, sizeof(UInt));
}

template <typename UInt>
UInt ReadLE(std::istream& in, const std::string& what) {
  unsigned char bytes[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(UInt))) {
    throw std::runtime_error("truncated file while reading " + what);
  }
  UInt value = 0;
  for (size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

inline void WriteF64(std::ostream& out, double v) {
  WriteLE<uint64_t>(out, std::bit_cast<uint64_t>(v));
}
inline double ReadF64(std::istream& in, const std::string& what) {
  return std::bit_cast<double>(ReadLE<uint64_t>(in, what));
}
inline void WriteF32(std::ostream& out, float v) {
  WriteLE<uint32_t>(out, std::bit_cast<uint32_t>(v));
}
inline float ReadF32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(ReadLE<uint32_t>(in, what));
}

}  // namespace xvgeo::internal

#endif  // XVGEO_SRC_BINARY_IO_H_
