// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vistory/attribute_view.hpp"
#include "vistory/audio_features.hpp"
#include "vistory/bridge.hpp"
#include "vistory/config.hpp"
#include "vistory/core_types.hpp"
#include "vistory/errors.hpp"
#include "vistory/estimators.hpp"
#include "vistory/generator_backend.hpp"
#include "vistory/stylizer.hpp"
#include "vistory/translator.hpp"

namespace vistory {

/// Aggregates consecutive blocks of `windows_per_interval` window vectors;
/// a trailing partial block is aggregated as it is. Median takes the
/// midpoint of the two central values for even block sizes.
std::vector<AttributeVector> interval_attributes(std::span<const AttributeVector> window_attributes,
                                                 std::size_t windows_per_interval,
                                                 Aggregation aggregation = Aggregation::kMean);

/// A generator backend together with its visual attribute estimator.
struct BackendPair {
  std::shared_ptr<GeneratorBackend> generator;
  std::shared_ptr<VisualAttributeEstimator> estimator;
  /// Set for bridge backends.
  std::shared_ptr<BridgeSession> session;
};

/// "synthetic" builds the synthetic world from `synthetic`; "bridge:<cmd>"
/// launches <cmd> and performs the handshake.
BackendPair open_backend(std::string_view spec, const SyntheticSettings& synthetic = {}, BridgeOptions options = {});

/// Every trained artifact a story needs.
struct Bundle {
  audio::FeatureConfig features;
  MlpRegressor audio_estimator;
  TranslationModel translator;
  AttributeView view;
  std::optional<StylePalette> palette;
  /// Audio-side statistics for dataset-level alignment.
  std::optional<ZScoreStats> dataset_stats;
  /// Visual estimator statistics; aligned attributes are mapped back into
  /// the estimator's units with them before translation. Identity if absent.
  std::optional<ZScoreStats> visual_stats;
};

/// Writes bundle.json plus one file per artifact into `dir`.
void save_bundle(const std::filesystem::path& dir, const Bundle& bundle);
/// Throws ArtifactError naming a missing artifact, ParseError for corrupt
/// JSON and VersionError for a different format version.
Bundle load_bundle(const std::filesystem::path& dir);

struct ManifestFrame {
  std::size_t index = 0;
  double start_time = 0.0;
  AttributeVector attributes;  // aligned interval attribute
  GeneratorVector generator;
  std::optional<std::size_t> style_id;
  SentimentBand band = SentimentBand::kNeutral;
  std::optional<std::string> image_path;
};

struct FrameManifest {
  std::string song;
  double interval_seconds = 5.0;
  Aggregation aggregation = Aggregation::kMean;
  ZScoreScope scope = ZScoreScope::kSongLevel;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
  std::vector<ManifestFrame> frames;
  /// Set when generation stopped early.
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
};

std::string serialize_manifest(const FrameManifest& manifest);

/// A pipeline failure tagged with the stage it happened in. The exit code
/// is that of the underlying error.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  StageError(std::string stage, const std::string& what, ExitCode code);
  const std::string& stage() const noexcept { return stage_; }
  ExitCode exit_code() const noexcept override { return code_; }

 private:
  std::string stage_;
  ExitCode code_;
};

/// Features -> window attributes -> alignment -> interval aggregation.
std::vector<AttributeVector> story_attributes(const AudioSegment& segment, const Bundle& bundle,
                                              const StoryConfig& cfg);

/// Runs the whole chain on one song. Frame i uses the i-th interval
/// attribute; translation noise comes from one stream seeded by cfg.seed.
/// When cfg.output_dir is set, manifest.json (and frame images for pixel
/// backends) are written there, also on failure, covering the frames that
/// completed.
FrameManifest generate_story(const std::filesystem::path& song, const Bundle& bundle, GeneratorBackend& backend,
                             const StoryConfig& cfg);

}  // namespace vistory
