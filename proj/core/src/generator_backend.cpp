// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/generator_backend.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "vistory/codec.hpp"
#include "vistory/random.hpp"

namespace vistory {

namespace {

constexpr char kMagic[4] = {'S', 'Y', 'N', 'G'};
constexpr std::string_view kSyntheticFormat = "synthetic";

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_u64_le(const std::uint8_t* in) {
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return value;
}

}  // namespace

std::vector<ImageHandle> GeneratorBackend::generate_batch(std::span<const GeneratorVector> generators) {
  std::vector<ImageHandle> out;
  out.reserve(generators.size());
  for (const auto& g : generators) out.push_back(generate(g));
  return out;
}

ImageHandle GeneratorBackend::stylize(const ImageHandle&, const ImageHandle&, double) {
  throw CapabilityError("backend does not support stylization");
}

void GeneratorBackend::check_domain(const GeneratorVector& generator) const {
  if (generator.class_id() >= num_classes()) {
    throw DomainError("class id " + std::to_string(generator.class_id()) + " outside [0, " +
                      std::to_string(num_classes()) + ")");
  }
  if (generator.latent_dim() != latent_dim()) {
    throw DomainError("latent has " + std::to_string(generator.latent_dim()) + " entries, backend expects " +
                      std::to_string(latent_dim()));
  }
}

SyntheticBackendSpec SyntheticBackendSpec::create(std::size_t num_classes, std::size_t latent_dim, std::uint64_t seed,
                                                  std::size_t attribute_dim) {
  if (num_classes == 0 || latent_dim == 0 || attribute_dim == 0) {
    throw ConfigError("synthetic backend needs K, d and N_a >= 1");
  }
  SyntheticBackendSpec spec;
  spec.num_classes = num_classes;
  spec.latent_dim = latent_dim;
  spec.seed = seed;
  spec.attribute_dim = attribute_dim;

  const auto k = static_cast<Eigen::Index>(num_classes);
  const auto na = static_cast<Eigen::Index>(attribute_dim);
  const auto d = static_cast<Eigen::Index>(latent_dim);
  Rng rng(seed);
  spec.base.resize(k, na);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index i = 0; i < na; ++i) spec.base(c, i) = rng.uniform(-1.0, 1.0);
  }
  const double stddev = std::sqrt(spec.mixing_variance());
  spec.mixing.reserve(num_classes);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::MatrixXd a(na, d);
    for (Eigen::Index i = 0; i < na; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = stddev * rng.normal();
    }
    spec.mixing.push_back(std::move(a));
  }
  return spec;
}

double SyntheticBackendSpec::mixing_variance() const {
  return 0.1 / std::sqrt(static_cast<double>(latent_dim));
}

AttributeVector SyntheticBackendSpec::attributes_of(const GeneratorVector& generator) const {
  if (generator.class_id() >= num_classes) throw DomainError("class id outside the synthetic backend");
  if (generator.latent_dim() != latent_dim) throw DimensionError("synthetic latent", latent_dim, generator.latent_dim());
  const auto z = Eigen::Map<const Eigen::VectorXd>(generator.latent().data(), static_cast<Eigen::Index>(latent_dim));
  const auto k = static_cast<Eigen::Index>(generator.class_id());
  const Eigen::VectorXd t = base.row(k).transpose() + mixing[generator.class_id()] * z;
  std::vector<double> values(attribute_dim);
  for (std::size_t i = 0; i < attribute_dim; ++i) {
    values[i] = std::clamp(t(static_cast<Eigen::Index>(i)), -kClamp, kClamp);
  }
  return AttributeVector(std::move(values));
}

ImageHandle encode_synthetic_image(const SyntheticBackendSpec& spec, const GeneratorVector& generator) {
  ImageHandle image;
  image.format = std::string(kSyntheticFormat);
  image.width = 1;
  image.height = 1;
  image.channels = 1;
  auto& out = image.payload;
  out.reserve(4 + 8 + 4 * 3 + 8 * generator.latent_dim());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u64_le(out, spec.seed);
  codec::put_u32_le(out, static_cast<std::uint32_t>(spec.num_classes));
  codec::put_u32_le(out, static_cast<std::uint32_t>(spec.latent_dim));
  codec::put_u32_le(out, static_cast<std::uint32_t>(generator.class_id()));
  for (double v : generator.latent()) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  return image;
}

GeneratorVector decode_synthetic_image(const SyntheticBackendSpec& spec, const ImageHandle& image) {
  const auto& p = image.payload;
  constexpr std::size_t kHeader = 4 + 8 + 12;
  if (image.format != kSyntheticFormat || p.size() < kHeader || std::memcmp(p.data(), kMagic, 4) != 0) {
    throw FormatError("image was not produced by a synthetic backend");
  }
  const std::uint64_t seed = get_u64_le(p.data() + 4);
  const std::uint32_t k = codec::get_u32_le(p.data() + 12);
  const std::uint32_t d = codec::get_u32_le(p.data() + 16);
  const std::uint32_t cls = codec::get_u32_le(p.data() + 20);
  if (seed != spec.seed || k != spec.num_classes || d != spec.latent_dim) {
    throw FormatError("synthetic image belongs to a different backend (seed/K/d mismatch)");
  }
  if (p.size() != kHeader + 8 * static_cast<std::size_t>(d)) throw FormatError("truncated synthetic payload");
  std::vector<double> latent(d);
  for (std::size_t i = 0; i < d; ++i) latent[i] = std::bit_cast<double>(get_u64_le(p.data() + kHeader + 8 * i));
  return GeneratorVector(cls, std::move(latent));
}

AttributeVector synthetic_estimate(const SyntheticBackendSpec& spec, const ImageHandle& image) {
  return spec.attributes_of(decode_synthetic_image(spec, image));
}

SyntheticBackend::SyntheticBackend(std::shared_ptr<const SyntheticBackendSpec> spec) : spec_(std::move(spec)) {
  if (!spec_) throw ConfigError("synthetic backend without a spec");
}

BackendCapabilities SyntheticBackend::capabilities() const {
  BackendCapabilities caps;
  caps.max_concurrent_requests = 1;
  caps.deterministic = true;
  return caps;
}

ImageHandle SyntheticBackend::generate(const GeneratorVector& generator) {
  check_domain(generator);
  return encode_synthetic_image(*spec_, generator);
}

SyntheticEstimator::SyntheticEstimator(std::shared_ptr<const SyntheticBackendSpec> spec) : spec_(std::move(spec)) {
  if (!spec_) throw ConfigError("synthetic estimator without a spec");
}

AttributeVector SyntheticEstimator::estimate(const ImageHandle& image) {
  return synthetic_estimate(*spec_, image);
}

PartialFailureError::PartialFailureError(const std::string& what, std::vector<SamplePair> completed)
    : BackendError(what + " (" + std::to_string(completed.size()) + " pairs completed)"),
      completed_(std::move(completed)) {}

std::vector<GeneratorVector> draw_generator_vectors(std::size_t num_classes, std::size_t latent_dim,
                                                    std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GeneratorVector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t cls = rng.index(num_classes);
    std::vector<double> latent(latent_dim);
    for (double& v : latent) v = rng.normal();
    out.emplace_back(cls, std::move(latent));
  }
  return out;
}

std::vector<SamplePair> sample_generator_space(GeneratorBackend& backend, VisualAttributeEstimator& estimator,
                                               std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("sample count must be at least 1");
  const auto draws = draw_generator_vectors(backend.num_classes(), backend.latent_dim(), count, seed);
  const std::size_t chunk = std::max<std::size_t>(64, 4 * backend.capabilities().max_concurrent_requests);

  std::vector<SamplePair> pairs;
  pairs.reserve(count);
  for (std::size_t start = 0; start < count; start += chunk) {
    const std::span<const GeneratorVector> batch(draws.data() + start, std::min(chunk, count - start));
    try {
      const auto images = backend.generate_batch(batch);
      const auto attrs = estimator.estimate_batch(images);
      for (std::size_t i = 0; i < batch.size(); ++i) pairs.push_back({batch[i], attrs[i]});
    } catch (const Error& e) {
      throw PartialFailureError(std::string("sampling failed at draw ") + std::to_string(start) + ": " + e.what(),
                                std::move(pairs));
    }
  }
  return pairs;
}

}  // namespace vistory
