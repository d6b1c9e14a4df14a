// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "vistory/core_types.hpp"

namespace vistory {

/// JSON Lines, one {"class_id", "latent", "attributes"} object per pair.
/// Values are written as float32.
void write_pair_corpus(std::ostream& out, std::span<const SamplePair> pairs);
void save_pair_corpus(const std::filesystem::path& path, std::span<const SamplePair> pairs);

/// Blank lines are skipped. Parse failures report the byte offset within
/// the whole stream.
std::vector<SamplePair> read_pair_corpus(std::istream& in);
std::vector<SamplePair> load_pair_corpus(const std::filesystem::path& path);

/// FNV-1a over the float32 wire values, so a corpus hashes the same before
/// and after a save/load round trip.
std::uint64_t corpus_hash(std::span<const SamplePair> pairs);

}  // namespace vistory
