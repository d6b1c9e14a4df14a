// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "vistory/core_types.hpp"

namespace vistory::audio {

/// Reads a RIFF/WAVE file (PCM 16/24/32-bit or IEEE float32), mixes it down
/// to mono by channel averaging and resamples it to `target_rate` by linear
/// interpolation. Throws IoError when the file cannot be read and
/// FormatError for unsupported or empty content.
AudioSegment load_audio(const std::filesystem::path& path, double target_rate);

/// Same as load_audio but from an in-memory file image.
AudioSegment decode_wav(std::span<const std::uint8_t> bytes, double target_rate);

/// Writes interleaved samples in [-1, 1] as a 16-bit PCM WAV file.
void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> interleaved,
                     std::uint32_t sample_rate, std::uint16_t channels = 1);

/// Linear-interpolation resampler; `resampler` of the result is "linear"
/// unless the rates already match.
AudioSegment resample_linear(const AudioSegment& in, double target_rate);

}  // namespace vistory::audio
