// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/errors.hpp"

namespace vistory {

DimensionError::DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
    : DataError(what + ": expected dimension " + std::to_string(expected) + ", got " +
                std::to_string(actual)),
      expected_(expected),
      actual_(actual) {}

TrainingDivergedError::TrainingDivergedError(const std::string& what, std::size_t epoch)
    : DataError(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}

ParseError::ParseError(const std::string& what, std::size_t byte_offset)
    : DataError(what + " (at byte " + std::to_string(byte_offset) + ")"),
      byte_offset_(byte_offset) {}

ArtifactError::ArtifactError(const std::string& artifact, const std::string& what)
    : DataError(artifact + ": " + what), artifact_(artifact) {}

}  // namespace vistory
