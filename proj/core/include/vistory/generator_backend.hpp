// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vistory/core_types.hpp"
#include "vistory/errors.hpp"
#include "vistory/estimators.hpp"

namespace vistory {

struct BackendCapabilities {
  bool supports_stylize = false;
  std::size_t max_concurrent_requests = 1;
  bool deterministic = true;
  /// True when generated images carry real pixels that can be written out.
  bool has_pixels = false;
  std::uint32_t image_size = 0;
};

/// A class-conditional generator f_g: (class, latent) -> image.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t latent_dim() const = 0;
  virtual BackendCapabilities capabilities() const = 0;

  /// Throws DomainError for class_id >= K or a latent of the wrong length.
  virtual ImageHandle generate(const GeneratorVector& generator) = 0;

  /// Results in input order. The default runs generate() sequentially.
  virtual std::vector<ImageHandle> generate_batch(std::span<const GeneratorVector> generators);

  /// Pixel-level stylization. Throws CapabilityError unless supported.
  virtual ImageHandle stylize(const ImageHandle& content, const ImageHandle& style, double blend);

 protected:
  void check_domain(const GeneratorVector& generator) const;
};

/// Ground-truth synthetic world, fully determined by (K, d, seed).
///
/// Class k has a base attribute b_k ~ U[-1, 1]^{N_a} and a mixing matrix
/// A_k in R^{N_a x d} with i.i.d. N(0, 0.1 / sqrt(d)) entries (variance), so
/// the visual attribute of (k, z) is clamp(b_k + A_k z, -3, 3).
struct SyntheticBackendSpec {
  std::size_t num_classes = 0;
  std::size_t latent_dim = 0;
  std::uint64_t seed = 0;
  std::size_t attribute_dim = 2;
  Eigen::MatrixXd base;                 // K x N_a
  std::vector<Eigen::MatrixXd> mixing;  // K matrices of N_a x d

  static constexpr double kClamp = 3.0;

  static SyntheticBackendSpec create(std::size_t num_classes, std::size_t latent_dim, std::uint64_t seed,
                                     std::size_t attribute_dim = 2);

  double mixing_variance() const;
  /// clamp(b_k + A_k z) computed directly from a generator vector.
  AttributeVector attributes_of(const GeneratorVector& generator) const;
};

/// Lossless (class, latent) payload tagged with the spec it belongs to.
ImageHandle encode_synthetic_image(const SyntheticBackendSpec& spec, const GeneratorVector& generator);
/// Throws FormatError for payloads from another backend or spec.
GeneratorVector decode_synthetic_image(const SyntheticBackendSpec& spec, const ImageHandle& image);

/// g(y) for images of the synthetic backend.
AttributeVector synthetic_estimate(const SyntheticBackendSpec& spec, const ImageHandle& image);

class SyntheticBackend final : public GeneratorBackend {
 public:
  explicit SyntheticBackend(std::shared_ptr<const SyntheticBackendSpec> spec);

  std::size_t num_classes() const override { return spec_->num_classes; }
  std::size_t latent_dim() const override { return spec_->latent_dim; }
  BackendCapabilities capabilities() const override;
  ImageHandle generate(const GeneratorVector& generator) override;

  const SyntheticBackendSpec& spec() const noexcept { return *spec_; }

 private:
  std::shared_ptr<const SyntheticBackendSpec> spec_;
};

class SyntheticEstimator final : public VisualAttributeEstimator {
 public:
  explicit SyntheticEstimator(std::shared_ptr<const SyntheticBackendSpec> spec);

  AttributeVector estimate(const ImageHandle& image) override;
  std::size_t attribute_dim() const override { return spec_->attribute_dim; }
  std::string tag() const override { return "synthetic"; }
  bool deterministic() const override { return true; }

 private:
  std::shared_ptr<const SyntheticBackendSpec> spec_;
};

/// Raised when a backend fails part-way through sampling; carries the pairs
/// completed before the failure, in draw order.
class PartialFailureError : public BackendError {
 public:
  PartialFailureError(const std::string& what, std::vector<SamplePair> completed);
  const std::vector<SamplePair>& completed() const noexcept { return completed_; }

 private:
  std::vector<SamplePair> completed_;
};

/// Draws N generator vectors (class uniform over K, latent ~ N(0, I)),
/// generates each image and records the estimator's attributes. The draws
/// depend only on `seed`; result order is draw order.
std::vector<SamplePair> sample_generator_space(GeneratorBackend& backend, VisualAttributeEstimator& estimator,
                                               std::size_t count, std::uint64_t seed);

/// The generator vectors sample_generator_space would draw.
std::vector<GeneratorVector> draw_generator_vectors(std::size_t num_classes, std::size_t latent_dim,
                                                    std::size_t count, std::uint64_t seed);

}  // namespace vistory
