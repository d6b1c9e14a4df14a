// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vistory {

using ClassId = std::size_t;

/// A point in the shared attribute space (valence, arousal by default).
///
/// The dimension is a runtime property so that other attribute spaces can be
/// plugged in; within one pipeline run every vector has the same length.
/// Entries are always finite.
class AttributeVector {
 public:
  AttributeVector() = default;
  explicit AttributeVector(std::vector<double> values);
  AttributeVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  friend bool operator==(const AttributeVector&, const AttributeVector&) = default;

 private:
  std::vector<double> values_;
};

/// Input of a class-conditional generator: a category and a latent code.
class GeneratorVector {
 public:
  GeneratorVector() = default;
  GeneratorVector(ClassId class_id, std::vector<double> latent);

  ClassId class_id() const noexcept { return class_id_; }
  std::span<const double> latent() const noexcept { return latent_; }
  std::size_t latent_dim() const noexcept { return latent_.size(); }

  friend bool operator==(const GeneratorVector&, const GeneratorVector&) = default;

 private:
  ClassId class_id_ = 0;
  std::vector<double> latent_;
};

/// A generator vector together with the attributes the visual estimator
/// reported for the image generated from it.
struct SamplePair {
  GeneratorVector generator;
  AttributeVector attributes;

  friend bool operator==(const SamplePair&, const SamplePair&) = default;
};

/// Mono audio with samples in [-1, 1].
struct AudioSegment {
  std::vector<float> samples;
  double sample_rate = 0.0;
  /// How the samples reached `sample_rate`: "none" or "linear".
  std::string resampler = "none";

  double duration_seconds() const noexcept {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Opaque image produced by a generator backend. The payload is either
/// encoded pixels or a backend-specific encoding (see `format`).
struct ImageHandle {
  std::vector<std::uint8_t> payload;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 0;
  std::string format;

  friend bool operator==(const ImageHandle&, const ImageHandle&) = default;
};

/// l2 distance between two attribute vectors. Throws DimensionError when
/// the lengths differ.
double divergence(const AttributeVector& a, const AttributeVector& b);

}  // namespace vistory
