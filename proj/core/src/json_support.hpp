// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

// Internal JSON helpers shared by the persistence code.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vistory/core_types.hpp"
#include "vistory/mlp.hpp"

namespace vistory::detail {

using nlohmann::json;

inline constexpr int kArtifactVersion = 1;

/// Throws ParseError carrying the byte offset reported by the parser.
json parse_json(std::string_view text, std::string_view artifact);

/// Throws ArtifactError naming `artifact` when the file is missing.
std::string read_text_file(const std::filesystem::path& path, std::string_view artifact);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Checks {"version": kArtifactVersion, "kind": kind}.
void require_header(const json& doc, std::string_view kind, std::string_view artifact);

[[noreturn]] void throw_format(std::string_view artifact, const std::string& what);

/// Reads a required member; wraps nlohmann type errors into FormatError.
template <typename T>
T get_field(const json& doc, const char* key, std::string_view artifact) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw_format(artifact, std::string("field '") + key + "': " + e.what());
  }
}

json layer_to_json(const nn::DenseLayer& layer);
nn::DenseLayer layer_from_json(const json& doc, std::string_view artifact);
json mlp_to_json(const nn::Mlp& mlp);
nn::Mlp mlp_from_json(const json& doc, std::string_view artifact);

/// Float arrays rounded through float32 (the wire precision).
json f32_array(std::span<const double> values);
std::vector<double> f32_vector(const json& doc, std::string_view artifact);

json generator_to_json(const GeneratorVector& generator);
GeneratorVector generator_from_json(const json& doc, std::string_view artifact);

}  // namespace vistory::detail
