// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/core_types.hpp"

#include <cmath>

#include "vistory/errors.hpp"

namespace vistory {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError(std::string(what) + " contains a non-finite entry");
  }
}

}  // namespace

AttributeVector::AttributeVector(std::vector<double> values) : values_(std::move(values)) {
  require_finite(values_, "attribute vector");
}

AttributeVector::AttributeVector(std::initializer_list<double> values)
    : AttributeVector(std::vector<double>(values)) {}

GeneratorVector::GeneratorVector(ClassId class_id, std::vector<double> latent)
    : class_id_(class_id), latent_(std::move(latent)) {
  require_finite(latent_, "latent vector");
}

double divergence(const AttributeVector& a, const AttributeVector& b) {
  if (a.size() != b.size()) throw DimensionError("divergence", a.size(), b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace vistory
