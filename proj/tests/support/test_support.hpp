// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "vistory/core_types.hpp"
#include "vistory/generator_backend.hpp"
#include "vistory/pipeline.hpp"

namespace vistory::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

AudioSegment sine(double hz, double seconds, double rate = 22050.0, double amplitude = 0.5);
AudioSegment white_noise(double seconds, std::uint64_t seed, double rate = 22050.0, double amplitude = 0.3);
AudioSegment silence(double seconds, double rate = 22050.0);
/// Unit impulses every `period` samples starting at `offset`.
AudioSegment click_train(std::size_t period, double seconds, double rate = 22050.0, std::size_t offset = 0);

/// Textbook O(n^2) DFT, independent of the FFT used by the library.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& x);

/// A short "song": a tone whose pitch and loudness change every few seconds.
void write_test_song(const std::filesystem::path& path, double seconds, double rate = 22050.0);

/// Small synthetic world plus a view and models trained on it, sized for
/// fast tests.
struct Fixture {
  std::shared_ptr<const SyntheticBackendSpec> spec;
  std::shared_ptr<SyntheticBackend> backend;
  std::shared_ptr<SyntheticEstimator> estimator;
  std::vector<SamplePair> pairs;
  Bundle bundle;
};

Fixture make_fixture(std::size_t classes = 12, std::size_t latent_dim = 4, std::size_t samples = 1200,
                     std::uint64_t seed = 5);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Path of the mock bridge executable, empty when it was not built.
std::string mock_bridge_path();
/// Path of the command-line tool, empty when it was not built.
std::string cli_path();

}  // namespace vistory::testing
