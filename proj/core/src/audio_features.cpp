// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/audio_features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "vistory/errors.hpp"

namespace vistory::audio {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

void require_frames(const AudioSegment& segment, const FeatureConfig& cfg) {
  if (segment.samples.size() < cfg.fft_size) {
    throw InsufficientDataError("audio segment has " + std::to_string(segment.samples.size()) +
                                " samples, fewer than one " + std::to_string(cfg.fft_size) +
                                "-sample frame");
  }
}

std::size_t bin_count(const FeatureConfig& cfg) { return cfg.fft_size / 2 + 1; }

/// Mean of the frames whose time index falls in each window. `frame_step`
/// is the distance in samples between consecutive rows of `frames`.
void pool_into(FeatureMatrix& out, Eigen::Index col_offset, const FeatureMatrix& frames,
               std::size_t frame_step, std::size_t window_samples) {
  const auto windows = static_cast<std::size_t>(out.rows());
  std::vector<std::size_t> counts(windows, 0);
  for (Eigen::Index f = 0; f < frames.rows(); ++f) {
    const std::size_t w = static_cast<std::size_t>(f) * frame_step / window_samples;
    if (w >= windows) break;
    out.row(static_cast<Eigen::Index>(w)).segment(col_offset, frames.cols()) += frames.row(f);
    ++counts[w];
  }
  for (std::size_t w = 0; w < windows; ++w) {
    if (counts[w] > 0) {
      out.row(static_cast<Eigen::Index>(w)).segment(col_offset, frames.cols()) /=
          static_cast<double>(counts[w]);
    }
  }
}

}  // namespace

void FeatureConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("feature config: " + what); };
  if (!(sample_rate > 0.0)) fail("sample_rate must be positive");
  if (fft_size == 0 || (fft_size & (fft_size - 1)) != 0) fail("fft_size must be a power of two");
  if (hop_length == 0) fail("hop_length must be positive");
  if (mel_bands == 0) fail("mel_bands must be positive");
  if (mfcc_count == 0 || mfcc_count > mel_bands) fail("mfcc_count must be in [1, mel_bands]");
  if (chroma_bins != 12) fail("chroma_bins must be 12");
  if (cens_smoothing_window == 0) fail("cens_smoothing_window must be positive");
  if (cens_downsample == 0) fail("cens_downsample must be positive");
  if (tempogram_window == 0) fail("tempogram_window must be positive");
  if (!(window_ms > 0.0)) fail("window_ms must be positive");
  if (!(log_floor > 0.0)) fail("log_floor must be positive");
}

std::size_t FeatureConfig::window_samples() const {
  return static_cast<std::size_t>(std::llround(sample_rate * window_ms / 1000.0));
}

FeatureMatrix power_spectrogram(const AudioSegment& segment, const FeatureConfig& cfg) {
  cfg.validate();
  require_frames(segment, cfg);
  const std::size_t n = cfg.fft_size;
  const std::size_t half = n / 2;
  const std::size_t frames = 1 + segment.samples.size() / cfg.hop_length;

  std::vector<double> window(n);
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buffer(n);
  std::vector<std::complex<double>> spectrum;
  FeatureMatrix power(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(half + 1));
  const auto total = static_cast<std::ptrdiff_t>(segment.samples.size());
  for (std::size_t f = 0; f < frames; ++f) {
    const auto start = static_cast<std::ptrdiff_t>(f * cfg.hop_length) - static_cast<std::ptrdiff_t>(half);
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t s = start + static_cast<std::ptrdiff_t>(i);
      buffer[i] = (s >= 0 && s < total) ? window[i] * segment.samples[static_cast<std::size_t>(s)] : 0.0;
    }
    fft.fwd(spectrum, buffer);
    for (std::size_t k = 0; k <= half; ++k) {
      power(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = std::norm(spectrum[k]);
    }
  }
  return power;
}

FeatureMatrix mel_filterbank(const FeatureConfig& cfg) {
  const std::size_t bins = bin_count(cfg);
  const double nyquist = cfg.sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  std::vector<double> edges(cfg.mel_bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(cfg.mel_bands + 1));
  }
  FeatureMatrix bank = FeatureMatrix::Zero(static_cast<Eigen::Index>(cfg.mel_bands),
                                           static_cast<Eigen::Index>(bins));
  for (std::size_t m = 0; m < cfg.mel_bands; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.fft_size);
      const double rising = (hz - lo) / (centre - lo);
      const double falling = (hi - hz) / (hi - centre);
      bank(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
          std::max(0.0, std::min(rising, falling));
    }
  }
  return bank;
}

FeatureMatrix dct_ii_orthonormal(std::size_t count, std::size_t length) {
  FeatureMatrix basis(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(length));
  const double n = static_cast<double>(length);
  for (std::size_t k = 0; k < count; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < length; ++i) {
      basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          scale * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                           (2.0 * n));
    }
  }
  return basis;
}

FeatureMatrix chroma_filterbank(const FeatureConfig& cfg) {
  const std::size_t bins = bin_count(cfg);
  FeatureMatrix bank = FeatureMatrix::Zero(static_cast<Eigen::Index>(cfg.chroma_bins),
                                           static_cast<Eigen::Index>(bins));
  for (std::size_t k = 1; k < bins; ++k) {
    const double hz = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.fft_size);
    if (hz < 27.5) continue;
    const long semitones_from_a = std::lround(12.0 * std::log2(hz / 440.0));
    const long pitch_class = ((semitones_from_a + 9) % 12 + 12) % 12;
    bank(pitch_class, static_cast<Eigen::Index>(k)) = 1.0;
  }
  return bank;
}

FeatureMatrix mfcc_from_power(const FeatureMatrix& power, const FeatureConfig& cfg) {
  const FeatureMatrix mel = power * mel_filterbank(cfg).transpose();
  const FeatureMatrix log_mel = mel.array().max(cfg.log_floor).log().matrix();
  return log_mel * dct_ii_orthonormal(cfg.mfcc_count, cfg.mel_bands).transpose();
}

FeatureMatrix cens_from_power(const FeatureMatrix& power, const FeatureConfig& cfg) {
  FeatureMatrix chroma = power * chroma_filterbank(cfg).transpose();
  const Eigen::Index frames = chroma.rows();
  const Eigen::Index classes = chroma.cols();

  // l1 normalisation followed by the CENS step quantisation.
  for (Eigen::Index f = 0; f < frames; ++f) {
    const double l1 = chroma.row(f).cwiseAbs().sum();
    for (Eigen::Index c = 0; c < classes; ++c) {
      const double share = l1 > 0.0 ? chroma(f, c) / l1 : 0.0;
      double level = 0.0;
      for (double threshold : cfg.cens_thresholds) {
        if (share > threshold) level += 0.25;
      }
      chroma(f, c) = level;
    }
  }

  // Temporal smoothing with a normalised Hann window (zero-padded edges).
  const auto len = static_cast<std::ptrdiff_t>(cfg.cens_smoothing_window);
  std::vector<double> kernel(static_cast<std::size_t>(len));
  double kernel_sum = 0.0;
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    // Interior of a symmetric Hann window of length len + 2, so no tap is zero.
    kernel[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(len + 1));
    kernel_sum += kernel[static_cast<std::size_t>(i)];
  }
  for (double& k : kernel) k /= kernel_sum;
  const std::ptrdiff_t centre = len / 2;

  const auto step = static_cast<Eigen::Index>(cfg.cens_downsample);
  const Eigen::Index out_frames = frames == 0 ? 0 : (frames - 1) / step + 1;
  FeatureMatrix out = FeatureMatrix::Zero(out_frames, classes);
  for (Eigen::Index o = 0; o < out_frames; ++o) {
    const Eigen::Index f = o * step;
    for (std::ptrdiff_t i = 0; i < len; ++i) {
      const Eigen::Index src = f + i - centre;
      if (src < 0 || src >= frames) continue;
      out.row(o) += kernel[static_cast<std::size_t>(i)] * chroma.row(src);
    }
    const double norm = out.row(o).norm();
    if (norm > 0.0) out.row(o) /= norm;
  }
  return out;
}

Eigen::VectorXd onset_envelope_from_power(const FeatureMatrix& power, const FeatureConfig& cfg) {
  const FeatureMatrix mel = power * mel_filterbank(cfg).transpose();
  const FeatureMatrix db = (10.0 * mel.array().max(cfg.log_floor).log10()).matrix();
  Eigen::VectorXd envelope = Eigen::VectorXd::Zero(db.rows());
  for (Eigen::Index f = 1; f < db.rows(); ++f) {
    envelope(f) = (db.row(f) - db.row(f - 1)).array().max(0.0).mean();
  }
  return envelope;
}

FeatureMatrix tempogram_from_envelope(const Eigen::VectorXd& envelope, const FeatureConfig& cfg) {
  const auto frames = envelope.size();
  const auto width = static_cast<Eigen::Index>(cfg.tempogram_window);
  const Eigen::Index half = width / 2;
  FeatureMatrix out = FeatureMatrix::Zero(frames, width);
  Eigen::VectorXd local(width);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index j = 0; j < width; ++j) {
      const Eigen::Index src = t - half + j;
      local(j) = (src >= 0 && src < frames) ? envelope(src) : 0.0;
    }
    for (Eigen::Index lag = 0; lag < width; ++lag) {
      out(t, lag) = local.head(width - lag).dot(local.tail(width - lag));
    }
    const double lag0 = out(t, 0);
    if (lag0 != 0.0) out.row(t) /= lag0;
  }
  return out;
}

FeatureMatrix mfcc(const AudioSegment& segment, const FeatureConfig& cfg) {
  return mfcc_from_power(power_spectrogram(segment, cfg), cfg);
}

FeatureMatrix cens(const AudioSegment& segment, const FeatureConfig& cfg) {
  return cens_from_power(power_spectrogram(segment, cfg), cfg);
}

Eigen::VectorXd onset_envelope(const AudioSegment& segment, const FeatureConfig& cfg) {
  return onset_envelope_from_power(power_spectrogram(segment, cfg), cfg);
}

FeatureMatrix tempogram(const AudioSegment& segment, const FeatureConfig& cfg) {
  return tempogram_from_envelope(onset_envelope(segment, cfg), cfg);
}

std::size_t window_count(std::size_t num_samples, const FeatureConfig& cfg) {
  const std::size_t window = cfg.window_samples();
  const std::size_t whole = num_samples / window;
  const std::size_t rest = num_samples - whole * window;
  return whole + (2 * rest >= window ? 1 : 0);
}

FeatureSequence extract_feature_sequence(const AudioSegment& segment, const FeatureConfig& cfg,
                                         std::string song_id) {
  cfg.validate();
  const std::size_t window = cfg.window_samples();
  if (window < cfg.fft_size) throw ConfigError("feature config: analysis window shorter than fft_size");
  if (segment.samples.size() < window) {
    throw InsufficientDataError("audio segment shorter than one " + std::to_string(cfg.window_ms) +
                                " ms window");
  }
  const std::size_t windows = window_count(segment.samples.size(), cfg);

  AudioSegment padded = segment;
  padded.samples.resize(windows * window, 0.0f);

  const FeatureMatrix power = power_spectrogram(padded, cfg);
  const FeatureMatrix mfcc_frames = mfcc_from_power(power, cfg);
  const FeatureMatrix cens_frames = cens_from_power(power, cfg);
  const FeatureMatrix tempo_frames = tempogram_from_envelope(onset_envelope_from_power(power, cfg), cfg);

  FeatureSequence seq;
  seq.window_seconds = cfg.window_ms / 1000.0;
  seq.song_id = std::move(song_id);
  seq.windows = FeatureMatrix::Zero(static_cast<Eigen::Index>(windows),
                                    static_cast<Eigen::Index>(cfg.feature_dim()));
  const auto mfcc_cols = static_cast<Eigen::Index>(cfg.mfcc_count);
  const auto chroma_cols = static_cast<Eigen::Index>(cfg.chroma_bins);
  pool_into(seq.windows, 0, mfcc_frames, cfg.hop_length, window);
  pool_into(seq.windows, mfcc_cols, cens_frames, cfg.hop_length * cfg.cens_downsample, window);
  pool_into(seq.windows, mfcc_cols + chroma_cols, tempo_frames, cfg.hop_length, window);
  return seq;
}

}  // namespace vistory::audio
