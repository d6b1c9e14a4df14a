// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vistory/audio_features.hpp"
#include "vistory/estimators.hpp"
#include "vistory/stylizer.hpp"
#include "vistory/translator.hpp"

namespace vistory {

/// A value in a key-value config file.
using ConfigScalar = std::variant<bool, double, std::string>;
struct ConfigValue {
  std::variant<bool, double, std::string, std::vector<ConfigScalar>> value;
  std::size_t line = 0;
};

/// Section -> key -> value. Keys before any section header live in "".
using ConfigDocument = std::map<std::string, std::map<std::string, ConfigValue>>;

/// Parses the TOML subset used for run configs: `[section]` headers,
/// `key = value` with strings, numbers, booleans and flat arrays, and `#`
/// comments. Duplicate keys and malformed lines raise ConfigError with the
/// line number.
ConfigDocument parse_config_document(std::string_view text);

enum class Aggregation { kMean, kMedian };

std::string_view to_string(Aggregation aggregation);
Aggregation aggregation_from_string(std::string_view tag);

struct SyntheticSettings {
  std::size_t classes = 1000;
  std::size_t latent_dim = 128;
  std::uint64_t seed = 0;
};

struct ViewSettings {
  /// Pairs to sample; 0 means 50 * K.
  std::size_t samples = 0;
  std::size_t num_clusters = 20;
  std::size_t num_subclusters = 16;
  std::uint64_t seed = 0;
};

struct StoryConfig {
  /// Must be a positive multiple of the feature window.
  double interval_seconds = 5.0;
  Aggregation aggregation = Aggregation::kMean;
  ZScoreScope scope = ZScoreScope::kSongLevel;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;

  /// Throws ConfigError; `window_seconds` is the feature window length.
  void validate(double window_seconds) const;
  std::size_t windows_per_interval(double window_seconds) const;
};

/// Every tunable of a run, grouped by config section.
struct RunConfig {
  audio::FeatureConfig features;
  TrainingConfig audio_training;
  SyntheticSettings synthetic;
  ViewSettings view;
  TranslatorConfig translator;
  BandThresholds thresholds;
  double blend = 0.1;
  StyleSelection selection = StyleSelection::kNearest;
  StoryConfig story;
};

/// Applies a document onto `base`. Unknown sections or keys and values of
/// the wrong type raise ConfigError naming the line.
RunConfig apply_config(const ConfigDocument& doc, RunConfig base = {});
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vistory
