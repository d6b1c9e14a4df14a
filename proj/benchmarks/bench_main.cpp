// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <vector>

#include <benchmark/benchmark.h>

#include "vistory/attribute_view.hpp"
#include "vistory/audio_features.hpp"
#include "vistory/generator_backend.hpp"
#include "vistory/kmeans.hpp"
#include "vistory/random.hpp"
#include "vistory/translator.hpp"

namespace {

using namespace vistory;

AudioSegment noisy_tone(double seconds) {
  AudioSegment seg;
  seg.sample_rate = 22050.0;
  Rng rng(1);
  const auto n = static_cast<std::size_t>(seconds * seg.sample_rate);
  seg.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / seg.sample_rate;
    seg.samples[i] = static_cast<float>(0.4 * std::sin(2.0 * std::numbers::pi * 330.0 * t) + 0.05 * rng.uniform(-1.0, 1.0));
  }
  return seg;
}

void BM_FeatureExtraction(benchmark::State& state) {
  const auto seg = noisy_tone(static_cast<double>(state.range(0)));
  const audio::FeatureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(audio::extract_feature_sequence(seg, cfg, "bench"));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seg.samples.size()));
}
BENCHMARK(BM_FeatureExtraction)->Arg(5)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Rng rng(2);
  Eigen::MatrixXd points(n, 2);
  for (Eigen::Index i = 0; i < points.size(); ++i) points.data()[i] = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(points, 20, 3));
}
BENCHMARK(BM_KMeans)->Arg(5000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_SampleGeneratorSpace(benchmark::State& state) {
  auto spec = std::make_shared<const SyntheticBackendSpec>(SyntheticBackendSpec::create(1000, 128, 4));
  SyntheticBackend backend(spec);
  SyntheticEstimator estimator(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_generator_space(backend, estimator, static_cast<std::size_t>(state.range(0)), 5));
  }
}
BENCHMARK(BM_SampleGeneratorSpace)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_TranslatorTraining(benchmark::State& state) {
  auto spec = std::make_shared<const SyntheticBackendSpec>(SyntheticBackendSpec::create(1000, 128, 6));
  SyntheticBackend backend(spec);
  SyntheticEstimator estimator(spec);
  const auto pairs = sample_generator_space(backend, estimator, 20000, 7);
  const auto view = build_attribute_view(pairs, 20, 16, 8);
  TranslatorConfig cfg;
  cfg.epochs = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(train_translator(view, 1000, cfg));
}
BENCHMARK(BM_TranslatorTraining)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
