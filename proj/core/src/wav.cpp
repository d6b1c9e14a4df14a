// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "vistory/codec.hpp"
#include "vistory/errors.hpp"

namespace vistory::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct WavFormat {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

double read_sample(const std::uint8_t* p, const WavFormat& fmt) {
  if (fmt.tag == kFormatFloat) {
    if (fmt.bits != 32) throw FormatError("wav: only 32-bit float is supported");
    return std::bit_cast<float>(codec::get_u32_le(p));
  }
  switch (fmt.bits) {
    case 16:
      return static_cast<std::int16_t>(get_u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xffffff;
      return v / 8388608.0;
    }
    case 32:
      return static_cast<std::int32_t>(codec::get_u32_le(p)) / 2147483648.0;
    default:
      throw FormatError("wav: unsupported PCM bit depth " + std::to_string(fmt.bits));
  }
}

}  // namespace

AudioSegment decode_wav(std::span<const std::uint8_t> bytes, double target_rate) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("wav: missing RIFF/WAVE header");
  }
  WavFormat fmt;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = codec::get_u32_le(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    const std::size_t len = std::min<std::size_t>(size, available);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw FormatError("wav: fmt chunk too short");
      const std::uint8_t* f = bytes.data() + body;
      fmt.tag = get_u16(f);
      fmt.channels = get_u16(f + 2);
      fmt.sample_rate = codec::get_u32_le(f + 4);
      fmt.bits = get_u16(f + 14);
      if (fmt.tag == kFormatExtensible) {
        if (len < 26) throw FormatError("wav: extensible fmt chunk too short");
        fmt.tag = get_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.subspan(body, len);
      have_data = true;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || !have_data) throw FormatError("wav: missing fmt or data chunk");
  if (fmt.tag != kFormatPcm && fmt.tag != kFormatFloat) {
    throw FormatError("wav: unsupported codec tag " + std::to_string(fmt.tag));
  }
  if (fmt.channels == 0 || fmt.sample_rate == 0 || fmt.bits % 8 != 0 || fmt.bits == 0) {
    throw FormatError("wav: invalid format header");
  }

  const std::size_t frame_bytes = static_cast<std::size_t>(fmt.channels) * (fmt.bits / 8);
  const std::size_t frames = data.size() / frame_bytes;
  if (frames == 0) throw FormatError("wav: no audio frames");

  AudioSegment seg;
  seg.sample_rate = fmt.sample_rate;
  seg.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data.data() + i * frame_bytes;
    if (fmt.channels == 1) {
      seg.samples[i] = static_cast<float>(std::clamp(read_sample(frame, fmt), -1.0, 1.0));
      continue;
    }
    double sum = 0.0;
    for (std::uint16_t c = 0; c < fmt.channels; ++c) sum += read_sample(frame + c * (fmt.bits / 8), fmt);
    seg.samples[i] = static_cast<float>(std::clamp(sum / fmt.channels, -1.0, 1.0));
  }
  return resample_linear(seg, target_rate);
}

AudioSegment load_audio(const std::filesystem::path& path, double target_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read audio file " + path.string());
  return decode_wav(bytes, target_rate);
}

AudioSegment resample_linear(const AudioSegment& in, double target_rate) {
  if (target_rate <= 0.0) throw DomainError("resample: target rate must be positive");
  if (in.sample_rate == target_rate) return in;
  if (in.samples.empty()) throw InsufficientDataError("resample: empty segment");

  const double ratio = in.sample_rate / target_rate;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(in.samples.size()) * target_rate / in.sample_rate));
  AudioSegment out;
  out.sample_rate = target_rate;
  out.resampler = "linear";
  out.samples.resize(std::max<std::size_t>(out_len, 1));
  const std::size_t last = in.samples.size() - 1;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const double src = static_cast<double>(i) * ratio;
    const auto lo = std::min(static_cast<std::size_t>(src), last);
    const std::size_t hi = std::min(lo + 1, last);
    const double frac = src - static_cast<double>(lo);
    out.samples[i] = static_cast<float>((1.0 - frac) * in.samples[lo] + frac * in.samples[hi]);
  }
  return out;
}

void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> interleaved,
                     std::uint32_t sample_rate, std::uint16_t channels) {
  std::vector<std::uint8_t> out;
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  auto tag = [&](const char* s) { out.insert(out.end(), s, s + 4); };
  auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  tag("RIFF");
  codec::put_u32_le(out, 36 + data_bytes);
  tag("WAVE");
  tag("fmt ");
  codec::put_u32_le(out, 16);
  u16(kFormatPcm);
  u16(channels);
  codec::put_u32_le(out, sample_rate);
  codec::put_u32_le(out, sample_rate * channels * 2);
  u16(static_cast<std::uint16_t>(channels * 2));
  u16(16);
  tag("data");
  codec::put_u32_le(out, data_bytes);
  for (float s : interleaved) {
    const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    u16(static_cast<std::uint16_t>(v));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace vistory::audio
