// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vistory/errors.hpp"
#include "vistory/wav.hpp"

namespace vistory::audio {
namespace {

using testing::TempDir;

// Minimal RIFF writer kept separate from the library's.
std::vector<std::uint8_t> riff(std::uint16_t tag, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                               const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> out;
  auto put = [&](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto str = [&](const char* s) { out.insert(out.end(), s, s + 4); };
  str("RIFF");
  put(36 + data.size(), 4);
  str("WAVE");
  str("fmt ");
  put(16, 4);
  put(tag, 2);
  put(channels, 2);
  put(rate, 4);
  put(rate * channels * bits / 8, 4);
  put(channels * bits / 8, 2);
  put(bits, 2);
  str("data");
  put(data.size(), 4);
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

TEST(Wav, Pcm16RoundTripMono) {
  TempDir dir;
  std::vector<float> samples{0.0f, 0.5f, -0.5f, 1.0f, -1.0f};
  write_wav_pcm16(dir / "a.wav", samples, 22050);
  const auto seg = load_audio(dir / "a.wav", 22050.0);
  EXPECT_EQ(seg.resampler, "none");
  ASSERT_EQ(seg.samples.size(), samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_NEAR(seg.samples[i], std::round(samples[i] * 32767.0) / 32768.0, 1e-7);
  }
}

TEST(Wav, StereoIsAveragedAndResampled) {
  TempDir dir;
  std::vector<float> interleaved;
  for (int i = 0; i < 44100; ++i) {
    interleaved.push_back(0.25f);
    interleaved.push_back(-0.75f);
  }
  write_wav_pcm16(dir / "s.wav", interleaved, 44100, 2);
  const auto seg = load_audio(dir / "s.wav", 22050.0);
  EXPECT_EQ(seg.samples.size(), 22050u);
  EXPECT_EQ(seg.resampler, "linear");
  EXPECT_DOUBLE_EQ(seg.sample_rate, 22050.0);
  const double expected = 0.5 * (std::round(0.25 * 32767) - std::round(0.75 * 32767)) / 32768.0;
  for (float v : seg.samples) ASSERT_NEAR(v, expected, 1e-6);
}

TEST(Wav, Float32AndPcm24) {
  std::vector<std::uint8_t> data(8);
  const float f[2] = {0.125f, -0.5f};
  std::memcpy(data.data(), f, 8);
  auto seg = decode_wav(riff(3, 1, 8000, 32, data), 8000.0);
  ASSERT_EQ(seg.samples.size(), 2u);
  EXPECT_FLOAT_EQ(seg.samples[0], 0.125f);
  EXPECT_FLOAT_EQ(seg.samples[1], -0.5f);

  // 0x400000 = 2^22 -> 0.5; 0xC00000 = -2^22 -> -0.5.
  seg = decode_wav(riff(1, 1, 8000, 24, {0x00, 0x00, 0x40, 0x00, 0x00, 0xC0}), 8000.0);
  ASSERT_EQ(seg.samples.size(), 2u);
  EXPECT_FLOAT_EQ(seg.samples[0], 0.5f);
  EXPECT_FLOAT_EQ(seg.samples[1], -0.5f);
}

TEST(Wav, LinearResamplerInterpolates) {
  AudioSegment in;
  in.sample_rate = 10.0;
  in.samples = {0.0f, 1.0f, 2.0f, 3.0f};
  const auto out = resample_linear(in, 20.0);
  ASSERT_EQ(out.samples.size(), 8u);
  EXPECT_FLOAT_EQ(out.samples[1], 0.5f);
  EXPECT_FLOAT_EQ(out.samples[4], 2.0f);
  EXPECT_FLOAT_EQ(out.samples[7], 3.0f);
}

TEST(Wav, ErrorCases) {
  TempDir dir;
  EXPECT_THROW(load_audio(dir / "missing.wav", 22050.0), IoError);
  EXPECT_THROW(decode_wav(riff(1, 1, 8000, 16, {}), 8000.0), FormatError);
  EXPECT_THROW(decode_wav(riff(1, 1, 8000, 12, {0, 0}), 8000.0), FormatError);
  const std::vector<std::uint8_t> junk{'n', 'o', 't', ' ', 'a', ' ', 'w', 'a', 'v', 'e', 'f', 'i', 'l', 'e'};
  EXPECT_THROW(decode_wav(junk, 8000.0), FormatError);
}

}  // namespace
}  // namespace vistory::audio
