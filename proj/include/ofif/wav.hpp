// Copyright 2026 The ofif-engine Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Minimal RIFF/WAVE reader and writer: mono, 16 kHz, 16-bit PCM or 32-bit
// IEEE float in; always 32-bit float out.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ofif/common.hpp"
#include "ofif/weights.hpp"

namespace ofif {

inline constexpr std::uint16_t kWavPcm = 1;
inline constexpr std::uint16_t kWavFloat = 3;
inline constexpr std::uint16_t kWavExtensible = 0xFFFE;

struct WavInfo {
  std::uint16_t format = 0;  // resolved (extensible unwrapped)
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

struct Wav {
  WavInfo info;
  std::vector<float> samples;
};

namespace detail {

inline std::uint32_t rd_le(std::string_view b, std::size_t off, int n) {
  std::uint32_t v = 0;
  for (int i = 0; i < n; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + i]))
         << (8 * i);
  }
  return v;
}

inline void wav_fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kFormat, "'" + path + "': " + msg);
}

}  // namespace detail

inline Wav parse_wav(std::string_view bytes, const std::string& path = "<wav>") {
  using detail::rd_le;
  using detail::wav_fail;
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" ||
      bytes.substr(8, 4) != "WAVE") {
    wav_fail(path, "not a RIFF/WAVE file");
  }
  Wav wav;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = rd_le(bytes, pos + 4, 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) wav_fail(path, "truncated '" + std::string(id) + "' chunk");
    if (id == "fmt ") {
      if (size < 16) wav_fail(path, "fmt chunk too short");
      WavInfo& in = wav.info;
      in.format = static_cast<std::uint16_t>(rd_le(bytes, body, 2));
      in.channels = static_cast<std::uint16_t>(rd_le(bytes, body + 2, 2));
      in.sample_rate = rd_le(bytes, body + 4, 4);
      in.bits = static_cast<std::uint16_t>(rd_le(bytes, body + 14, 2));
      if (in.format == kWavExtensible) {
        if (size < 40) wav_fail(path, "extensible fmt chunk too short");
        in.format = static_cast<std::uint16_t>(rd_le(bytes, body + 24, 2));
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) wav_fail(path, "data chunk before fmt chunk");
      const WavInfo& in = wav.info;
      if (in.channels != 1) {
        wav_fail(path, "expected mono audio, got " +
                           std::to_string(in.channels) + " channels");
      }
      if (in.sample_rate != static_cast<std::uint32_t>(kSampleRate)) {
        wav_fail(path, "expected a 16000 Hz sample rate, got " +
                           std::to_string(in.sample_rate) + " Hz");
      }
      if (in.format == kWavPcm && in.bits == 16) {
        wav.samples.resize(size / 2);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) {
          const auto u = static_cast<std::uint16_t>(rd_le(bytes, body + 2 * i, 2));
          wav.samples[i] = static_cast<float>(static_cast<std::int16_t>(u)) / 32768.0f;
        }
      } else if (in.format == kWavFloat && in.bits == 32) {
        wav.samples.resize(size / 4);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) {
          wav.samples[i] = std::bit_cast<float>(rd_le(bytes, body + 4 * i, 4));
        }
      } else {
        wav_fail(path, "unsupported encoding (format " + std::to_string(in.format) +
                           ", " + std::to_string(in.bits) +
                           " bits); expected 16-bit PCM or 32-bit float");
      }
      return wav;
    }
    pos = body + size + (size & 1u);
  }
  wav_fail(path, have_fmt ? "missing data chunk" : "missing fmt chunk");
  return wav;
}

inline Wav read_wav(const std::string& path) {
  return parse_wav(read_file_bytes(path), path);
}

inline std::string serialize_wav_float(std::span<const float> samples) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 4);
  std::string out = "RIFF";
  detail::put_le(out, 36 + data_bytes, 4);
  out += "WAVEfmt ";
  detail::put_le(out, 16, 4);
  detail::put_le(out, kWavFloat, 2);
  detail::put_le(out, 1, 2);
  detail::put_le(out, kSampleRate, 4);
  detail::put_le(out, kSampleRate * 4, 4);
  detail::put_le(out, 4, 2);
  detail::put_le(out, 32, 2);
  out += "data";
  detail::put_le(out, data_bytes, 4);
  for (float v : samples) detail::put_le(out, std::bit_cast<std::uint32_t>(v), 4);
  return out;
}

// 16-bit PCM writer; used to produce test fixtures.
inline std::string serialize_wav_pcm16(std::span<const float> samples,
                                       int channels = 1,
                                       int rate = kSampleRate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string out = "RIFF";
  detail::put_le(out, 36 + data_bytes, 4);
  out += "WAVEfmt ";
  detail::put_le(out, 16, 4);
  detail::put_le(out, kWavPcm, 2);
  detail::put_le(out, static_cast<std::uint64_t>(channels), 2);
  detail::put_le(out, static_cast<std::uint64_t>(rate), 4);
  detail::put_le(out, static_cast<std::uint64_t>(rate) * channels * 2, 4);
  detail::put_le(out, static_cast<std::uint64_t>(channels) * 2, 2);
  detail::put_le(out, 16, 2);
  out += "data";
  detail::put_le(out, data_bytes, 4);
  for (float v : samples) {
    const double c = std::clamp(static_cast<double>(v) * 32768.0, -32768.0, 32767.0);
    detail::put_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c))), 2);
  }
  return out;
}

inline void write_wav(const std::string& path, std::span<const float> samples) {
  write_file_bytes(path, serialize_wav_float(samples));
}

}  // namespace ofif
