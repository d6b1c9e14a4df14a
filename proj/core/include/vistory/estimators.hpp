// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vistory/audio_features.hpp"
#include "vistory/core_types.hpp"
#include "vistory/mlp.hpp"

namespace vistory {

struct TrainingPhase {
  std::size_t epochs = 0;
  double learning_rate = 0.0;
};

/// Adam training schedule. The default is the two-phase audio schedule
/// (30 epochs at 1e-4, then 20 at 1e-5).
struct TrainingConfig {
  std::vector<TrainingPhase> schedule{{30, 1e-4}, {20, 1e-5}};
  std::size_t batch_size = 32;
  nn::AdamSettings adam;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t total_epochs() const noexcept;
};

/// A trained attribute regressor plus free-form training metadata.
struct MlpRegressor {
  nn::Mlp network;
  std::map<std::string, std::string> training_meta;

  std::size_t input_dim() const noexcept { return network.input_dim(); }
  std::size_t output_dim() const noexcept { return network.output_dim(); }
};

struct TrainedRegressor {
  MlpRegressor model;
  std::vector<double> loss_trace;  // epoch-mean training loss
};

/// 256 sigmoid units followed by a linear output of `attribute_dim`.
std::vector<nn::LayerSpec> default_audio_architecture(std::size_t attribute_dim = 2);

/// Fits an MLP by mini-batch Adam on mean squared error. Rows are shuffled
/// each epoch from a stream seeded by cfg.seed, so results are reproducible
/// bit for bit. Throws TrainingDivergedError on a non-finite loss.
TrainedRegressor train_mlp_regressor(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                                     std::span<const nn::LayerSpec> architecture, const TrainingConfig& cfg);

Eigen::MatrixXd predict(const MlpRegressor& model, const Eigen::MatrixXd& features);

/// One attribute vector per feature window.
std::vector<AttributeVector> predict_attributes(const MlpRegressor& model, const audio::FeatureSequence& features);

enum class ZScoreScope { kDatasetLevel, kSongLevel };

std::string_view to_string(ZScoreScope scope);
ZScoreScope zscore_scope_from_string(std::string_view tag);

struct ZScoreStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std, floored at kStdFloor
  ZScoreScope scope = ZScoreScope::kDatasetLevel;

  static constexpr double kStdFloor = 1e-8;
};

/// Throws InsufficientDataError for fewer than two vectors.
ZScoreStats compute_zscore_stats(std::span<const AttributeVector> vectors, ZScoreScope scope);
std::vector<AttributeVector> zscore_align(std::span<const AttributeVector> vectors, const ZScoreStats& stats);
std::vector<AttributeVector> zscore_unalign(std::span<const AttributeVector> vectors, const ZScoreStats& stats);

/// Finite-difference check of the analytic gradient of `loss` evaluated on
/// the network output for `inputs`. See nn::finite_difference_check.
double gradient_check(const nn::Mlp& model, const Eigen::MatrixXd& inputs,
                      const std::function<nn::LossResult(const Eigen::MatrixXd&)>& loss, double step = 1e-5);

/// Maps an image to the attribute space (g in the round-trip identity).
class VisualAttributeEstimator {
 public:
  virtual ~VisualAttributeEstimator() = default;

  virtual AttributeVector estimate(const ImageHandle& image) = 0;
  /// Estimates in input order. Backends may overlap the requests.
  virtual std::vector<AttributeVector> estimate_batch(std::span<const ImageHandle> images);
  virtual std::size_t attribute_dim() const = 0;
  /// "synthetic" or "external_backend".
  virtual std::string tag() const = 0;
  virtual bool deterministic() const = 0;
};

/// Annotated training data: one target row per feature window.
struct AnnotatedDataset {
  Eigen::MatrixXd features;
  Eigen::MatrixXd targets;
  std::vector<std::string> row_ids;  // song id of each row
};

/// Reads a CSV with header `id,valence,arousal` and, for each id, the
/// feature file `<features_dir>/<id>.dsft`. Every window of a song gets the
/// song's annotation.
AnnotatedDataset load_annotated_dataset(const std::filesystem::path& annotations_csv,
                                        const std::filesystem::path& features_dir);

// Persistence (JSON, weights as base64 little-endian float32).
std::string serialize_regressor(const MlpRegressor& model);
MlpRegressor parse_regressor(std::string_view json_text);
void save_regressor(const std::filesystem::path& path, const MlpRegressor& model);
MlpRegressor load_regressor(const std::filesystem::path& path);

std::string serialize_zscore_stats(const ZScoreStats& stats);
ZScoreStats parse_zscore_stats(std::string_view json_text);

}  // namespace vistory
