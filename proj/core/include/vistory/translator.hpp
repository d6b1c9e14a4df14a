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

#include "vistory/attribute_view.hpp"
#include "vistory/core_types.hpp"
#include "vistory/estimators.hpp"
#include "vistory/generator_backend.hpp"
#include "vistory/mlp.hpp"
#include "vistory/random.hpp"

namespace vistory {

/// Attribute vector -> generator vector. A shared sigmoid trunk
/// (N_a -> 64 -> 256) branches into a softmax class head (256 -> K) and an
/// identity latent head (256 -> d).
struct TranslationModel {
  nn::Mlp trunk;
  nn::DenseLayer class_head;
  nn::DenseLayer latent_head;
  /// Classes translate() may return, ascending.
  std::vector<ClassId> retained_classes;
  std::map<std::string, std::string> training_meta;

  std::size_t attribute_dim() const noexcept { return trunk.input_dim(); }
  std::size_t num_classes() const noexcept { return static_cast<std::size_t>(class_head.outputs()); }
  std::size_t latent_dim() const noexcept { return static_cast<std::size_t>(latent_head.outputs()); }
};

struct TranslatorConfig {
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  double latent_loss_weight = 1.0;  // lambda
  double noise_sigma = 0.1;
  /// 0 trains on the whole view per step.
  std::size_t batch_size = 0;
  nn::AdamSettings adam;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TranslatorOutputs {
  Eigen::MatrixXd hidden;         // trunk output
  Eigen::MatrixXd probabilities;  // rows sum to 1
  Eigen::MatrixXd latents;
  nn::Mlp::Trace trunk_trace;
};

struct TrainedTranslator {
  TranslationModel model;
  std::vector<double> loss_trace;  // per epoch, mean over the epoch's steps
};

/// Randomly initialized model (the state training starts from).
TranslationModel make_translator(std::size_t attribute_dim, std::size_t num_classes, std::size_t latent_dim,
                                 std::vector<ClassId> retained_classes, std::uint64_t seed);

TranslatorOutputs forward(const TranslationModel& model, const Eigen::MatrixXd& attributes);

/// Composite loss: mean cross-entropy of the class head plus lambda times
/// the mean squared l2 error of the latent head.
struct CompositeLoss {
  double value = 0.0;
  double cross_entropy = 0.0;
  double latent_error = 0.0;
  Eigen::MatrixXd grad_probabilities;
  Eigen::MatrixXd grad_latents;
};

CompositeLoss composite_loss(const TranslatorOutputs& outputs, std::span<const ClassId> classes,
                             const Eigen::MatrixXd& latent_targets, double latent_weight);

/// Parameter views in a fixed order: trunk, class head, latent head.
std::vector<std::span<double>> parameters(TranslationModel& model);

/// Gradients of composite_loss, in the order of parameters().
std::vector<nn::DenseGrad> composite_gradients(const TranslationModel& model, const TranslatorOutputs& outputs,
                                               const CompositeLoss& loss);

/// Finite-difference check of the composite loss on the given batch.
double translator_gradient_check(TranslationModel model, const Eigen::MatrixXd& attributes,
                                 std::span<const ClassId> classes, const Eigen::MatrixXd& latent_targets,
                                 double latent_weight, double step = 1e-5);

/// Fits the model on the view's smoothed pairs. Throws
/// TrainingDivergedError on a non-finite loss.
TrainedTranslator train_translator(const AttributeView& view, std::size_t num_classes, const TranslatorConfig& cfg);

/// Class: argmax of the class head over the retained classes (lowest id on
/// ties). Latent: latent head output plus sigma * N(0, I) from `rng`; no
/// draws are made when sigma is 0.
GeneratorVector translate(const TranslationModel& model, const AttributeVector& attributes, double sigma, Rng& rng);

/// Noise-free translation of several vectors.
std::vector<GeneratorVector> translate_all(const TranslationModel& model, std::span<const AttributeVector> attributes);

struct RoundTrip {
  double mean = 0.0;
  double max = 0.0;
  std::vector<double> divergences;
};

/// D(t, g(f_g(translate(t, sigma = 0)))) for each t.
RoundTrip roundtrip_divergence(const TranslationModel& model, GeneratorBackend& backend,
                               VisualAttributeEstimator& estimator, std::span<const AttributeVector> attributes);

std::string serialize_translator(const TranslationModel& model);
TranslationModel parse_translator(std::string_view json_text);
void save_translator(const std::filesystem::path& path, const TranslationModel& model);
TranslationModel load_translator(const std::filesystem::path& path);

}  // namespace vistory
