// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "vistory/core_types.hpp"

namespace vistory::audio {

/// Row-per-frame feature matrix.
using FeatureMatrix = Eigen::MatrixXd;

/// Extraction parameters. The defaults follow the common librosa defaults
/// and yield a 40 + 12 + 384 = 436 dimensional window vector.
struct FeatureConfig {
  double sample_rate = 22050.0;
  std::size_t fft_size = 2048;
  std::size_t hop_length = 512;
  std::size_t mel_bands = 128;
  std::size_t mfcc_count = 40;
  std::size_t chroma_bins = 12;
  std::size_t cens_smoothing_window = 41;
  std::size_t cens_downsample = 10;
  std::size_t tempogram_window = 384;
  double window_ms = 500.0;

  double log_floor = 1e-10;
  std::array<double, 4> cens_thresholds{0.05, 0.1, 0.2, 0.4};

  /// Throws ConfigError when a field violates its invariant.
  void validate() const;

  std::size_t feature_dim() const noexcept { return mfcc_count + chroma_bins + tempogram_window; }
  std::size_t window_samples() const;
};

/// One pooled feature vector per non-overlapping analysis window.
struct FeatureSequence {
  FeatureMatrix windows;  // rows = windows, cols = feature_dim()
  double window_seconds = 0.5;
  std::string song_id;

  std::size_t size() const noexcept { return static_cast<std::size_t>(windows.rows()); }
};

/// Power spectrogram |X|^2 [frames x (fft/2 + 1)] of a centered, zero-padded
/// STFT with a periodic Hann window; frame i is centered on sample i * hop.
FeatureMatrix power_spectrogram(const AudioSegment& segment, const FeatureConfig& cfg);

/// Triangular HTK-mel filterbank [mel_bands x (fft/2 + 1)] spanning 0 Hz to
/// Nyquist with unit peak height.
FeatureMatrix mel_filterbank(const FeatureConfig& cfg);

/// Orthonormal DCT-II basis truncated to the first `count` rows.
FeatureMatrix dct_ii_orthonormal(std::size_t count, std::size_t length);

/// Pitch-class folding matrix [chroma_bins x (fft/2 + 1)], C = 0, A = 9, A440
/// tuning. Bins below 27.5 Hz are ignored.
FeatureMatrix chroma_filterbank(const FeatureConfig& cfg);

FeatureMatrix mfcc(const AudioSegment& segment, const FeatureConfig& cfg);
FeatureMatrix cens(const AudioSegment& segment, const FeatureConfig& cfg);
FeatureMatrix tempogram(const AudioSegment& segment, const FeatureConfig& cfg);

/// Half-wave rectified spectral flux of the dB mel spectrogram, averaged
/// over bands. Element 0 is zero.
Eigen::VectorXd onset_envelope(const AudioSegment& segment, const FeatureConfig& cfg);

// Variants on a precomputed power spectrogram.
FeatureMatrix mfcc_from_power(const FeatureMatrix& power, const FeatureConfig& cfg);
FeatureMatrix cens_from_power(const FeatureMatrix& power, const FeatureConfig& cfg);
Eigen::VectorXd onset_envelope_from_power(const FeatureMatrix& power, const FeatureConfig& cfg);
FeatureMatrix tempogram_from_envelope(const Eigen::VectorXd& envelope, const FeatureConfig& cfg);

/// Number of analysis windows for `num_samples`: whole windows plus one
/// trailing partial window when it is at least half a window long.
std::size_t window_count(std::size_t num_samples, const FeatureConfig& cfg);

/// Mean-pools MFCC, CENS and tempogram frames into windows and concatenates
/// them as [MFCC | CENS | tempogram]. A short trailing window is dropped, a
/// long one is zero-padded. Throws InsufficientDataError when the segment is
/// shorter than one window.
FeatureSequence extract_feature_sequence(const AudioSegment& segment, const FeatureConfig& cfg,
                                         std::string song_id = {});

}  // namespace vistory::audio
