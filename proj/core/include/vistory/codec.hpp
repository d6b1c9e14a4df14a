// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vistory::codec {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws FormatError on characters outside the standard alphabet.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Packs values as little-endian IEEE-754 binary32.
std::vector<std::uint8_t> pack_f32(std::span<const double> values);
std::vector<double> unpack_f32(std::span<const std::uint8_t> bytes);

/// Shorthands for the base64(f32 LE) arrays used in model files.
std::string encode_f32_base64(std::span<const double> values);
std::vector<double> decode_f32_base64(std::string_view text);

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t value);
std::uint32_t get_u32_le(const std::uint8_t* in);

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes);
  void update_u64(std::uint64_t value);
  void update_f32(double value);
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t value);

}  // namespace vistory::codec
