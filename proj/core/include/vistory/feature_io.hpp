// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace vistory::audio {

/// Binary feature matrix: 16-byte little-endian header {"DSFT", version,
/// rows, cols} followed by row-major float32 values.
inline constexpr std::uint32_t kFeatureFileVersion = 1;

std::vector<std::uint8_t> encode_feature_matrix(const Eigen::MatrixXd& matrix);
Eigen::MatrixXd decode_feature_matrix(std::span<const std::uint8_t> bytes);

void write_feature_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);
Eigen::MatrixXd read_feature_matrix(const std::filesystem::path& path);

}  // namespace vistory::audio
