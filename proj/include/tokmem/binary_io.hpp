// Copyright (c) 2026, The tokmem Authors. All rights reserved.
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

// Little-endian primitives shared by the on-disk formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokmem/error.hpp"

namespace tokmem::io {

template <typename UInt>
inline void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

inline void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }

inline void put_floats(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
}

inline void put_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

/// Reads exactly `size` bytes or throws TruncatedPayload.
inline void read_exact(std::istream& in, char* dst, std::size_t size, std::string_view what) {
  in.read(dst, static_cast<std::streamsize>(size));
  if (static_cast<std::size_t>(in.gcount()) != size) {
    throw Error(ErrorKind::kTruncatedPayload, "unexpected end of data while reading " + std::string(what));
  }
}

template <typename UInt>
inline UInt get_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(UInt)> bytes;
  read_exact(in, reinterpret_cast<char*>(bytes.data()), bytes.size(), what);
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) value |= UInt{bytes[i]} << (8 * i);
  return value;
}

inline std::uint8_t get_u8(std::istream& in, std::string_view what) { return get_le<std::uint8_t>(in, what); }
inline std::uint32_t get_u32(std::istream& in, std::string_view what) { return get_le<std::uint32_t>(in, what); }
inline std::uint64_t get_u64(std::istream& in, std::string_view what) { return get_le<std::uint64_t>(in, what); }

inline void get_floats(std::istream& in, std::span<float> dst, std::string_view what) {
  read_exact(in, reinterpret_cast<char*>(dst.data()), dst.size_bytes(), what);
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : dst) {
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      raw = ((raw & 0xFF) << 24) | ((raw & 0xFF00) << 8) | ((raw >> 8) & 0xFF00) | (raw >> 24);
      f = std::bit_cast<float>(raw);
    }
  }
}

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::array<char, 4> got{};
  in.read(got.data(), got.size());
  if (in.gcount() != 4 || std::string_view(got.data(), 4) != magic) {
    throw Error(ErrorKind::kBadMagic, "expected magic '" + std::string(magic) + "'");
  }
}

/// Throws TrailingData if the stream has bytes left.
inline void expect_eof(std::istream& in, std::string_view what) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::kTrailingData, "unexpected bytes after " + std::string(what));
  }
}

}  // namespace tokmem::io
