// Copyright 2026 The mdd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mdd/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mdd/common.hpp"

namespace mdd {

namespace {

std::uint32_t ReadU32(const std::string& b, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24;
}

std::uint16_t ReadU16(const std::string& b, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                    static_cast<unsigned char>(b[off + 1]) << 8);
}

void PutU32(std::string* b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b->push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU16(std::string* b, std::uint16_t v) {
  b->push_back(static_cast<char>(v & 0xFF));
  b->push_back(static_cast<char>(v >> 8));
}

}  // namespace

Waveform ParseWav(const std::string& b) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    if (b.size() >= 7 && b.compare(0, 7, "NIST_1A") == 0) {
      throw ValidationError("NIST SPHERE audio is not supported; convert to PCM WAV first");
    }
    throw ValidationError("not a RIFF/WAVE file");
  }
  std::size_t off = 12;
  bool have_fmt = false;
  int channels = 0, bits = 0, rate = 0;
  while (off + 8 <= b.size()) {
    std::string id = b.substr(off, 4);
    std::uint32_t size = ReadU32(b, off + 4);
    std::size_t body = off + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > b.size()) throw ValidationError("truncated fmt chunk");
      std::uint16_t format = ReadU16(b, body);
      channels = ReadU16(b, body + 2);
      rate = static_cast<int>(ReadU32(b, body + 4));
      bits = ReadU16(b, body + 14);
      if (format == 0xFFFE && size >= 40) format = ReadU16(b, body + 24);
      if (format != 1) throw ValidationError("unsupported WAV encoding (only PCM is accepted)");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ValidationError("WAV data chunk precedes fmt chunk");
      if (channels != 1) throw ValidationError("WAV has " + std::to_string(channels) + " channels; mono required");
      if (bits != 16) throw ValidationError("WAV has " + std::to_string(bits) + "-bit samples; 16-bit required");
      if (rate <= 0) throw ValidationError("WAV sample rate must be positive");
      if (body + size > b.size()) throw ValidationError("truncated WAV data chunk");
      Waveform w;
      w.sample_rate_hz = rate;
      std::size_t n = size / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto v = static_cast<std::int16_t>(ReadU16(b, body + 2 * i));
        w.samples[i] = v / 32768.0;
      }
      return w;
    }
    off = body + size + (size & 1);
  }
  throw ValidationError(have_fmt ? "WAV has no data chunk" : "WAV has no fmt chunk");
}

Waveform LoadWav(const std::string& path) {
  if (Trim(path).ends_with("|")) {
    throw ValidationError("wav.scp entry is a command pipe ('" + path +
                          "'); convert the audio to PCM WAV and reference the file directly");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open audio file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseWav(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void SaveWav(const std::string& path, const Waveform& w) {
  std::string b = "RIFF";
  auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  PutU32(&b, 36 + data_bytes);
  b += "WAVEfmt ";
  PutU32(&b, 16);
  PutU16(&b, 1);
  PutU16(&b, 1);
  PutU32(&b, static_cast<std::uint32_t>(w.sample_rate_hz));
  PutU32(&b, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  PutU16(&b, 2);
  PutU16(&b, 16);
  b += "data";
  PutU32(&b, data_bytes);
  for (double s : w.samples) {
    double c = std::clamp(s, -1.0, 1.0) * 32767.0;
    PutU16(&b, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c))));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write " + path);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

Waveform Resample(const Waveform& w, int target_hz) {
  if (target_hz <= 0) throw ValidationError("resample target rate must be positive");
  if (target_hz == w.sample_rate_hz) return w;
  const long long src = w.sample_rate_hz;
  const long long dst = target_hz;
  const long long n_in = static_cast<long long>(w.samples.size());
  const long long n_out = (2 * n_in * dst + src) / (2 * src);

  // Cutoff in cycles per input sample, slightly below the lower Nyquist.
  const double cutoff = 0.5 * 0.95 * static_cast<double>(std::min(src, dst)) / static_cast<double>(src);
  const int kZeros = 16;
  const double half_width = kZeros / (2.0 * cutoff);

  Waveform out;
  out.sample_rate_hz = target_hz;
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  for (long long n = 0; n < n_out; ++n) {
    double t = static_cast<double>(n) * static_cast<double>(src) / static_cast<double>(dst);
    auto lo = static_cast<long long>(std::ceil(t - half_width));
    auto hi = static_cast<long long>(std::floor(t + half_width));
    double acc = 0.0;
    for (long long i = std::max(lo, 0LL); i <= std::min(hi, n_in - 1); ++i) {
      double x = t - static_cast<double>(i);
      double arg = 2.0 * cutoff * x;
      double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      double window = 0.5 + 0.5 * std::cos(std::numbers::pi * x / half_width);
      acc += w.samples[static_cast<std::size_t>(i)] * 2.0 * cutoff * sinc * window;
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

}  // namespace mdd
