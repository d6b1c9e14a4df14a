// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/feature_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vistory/codec.hpp"
#include "vistory/errors.hpp"

namespace vistory::audio {

std::vector<std::uint8_t> encode_feature_matrix(const Eigen::MatrixXd& matrix) {
  std::vector<std::uint8_t> out{'D', 'S', 'F', 'T'};
  out.reserve(16 + static_cast<std::size_t>(matrix.size()) * 4);
  codec::put_u32_le(out, kFeatureFileVersion);
  codec::put_u32_le(out, static_cast<std::uint32_t>(matrix.rows()));
  codec::put_u32_le(out, static_cast<std::uint32_t>(matrix.cols()));
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      codec::put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(matrix(r, c))));
    }
  }
  return out;
}

Eigen::MatrixXd decode_feature_matrix(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "DSFT", 4) != 0) {
    throw FormatError("feature file: bad magic");
  }
  const std::uint32_t version = codec::get_u32_le(bytes.data() + 4);
  if (version != kFeatureFileVersion) {
    throw VersionError("feature file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t rows = codec::get_u32_le(bytes.data() + 8);
  const std::uint32_t cols = codec::get_u32_le(bytes.data() + 12);
  const std::size_t expected = 16 + static_cast<std::size_t>(rows) * cols * 4;
  if (bytes.size() != expected) {
    throw FormatError("feature file: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  Eigen::MatrixXd matrix(rows, cols);
  const std::uint8_t* p = bytes.data() + 16;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c, p += 4) {
      matrix(r, c) = std::bit_cast<float>(codec::get_u32_le(p));
    }
  }
  return matrix;
}

void write_feature_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix) {
  const auto bytes = encode_feature_matrix(matrix);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Eigen::MatrixXd read_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_feature_matrix(bytes);
}

}  // namespace vistory::audio
