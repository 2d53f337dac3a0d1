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

#pragma once

#include <string>
#include <vector>

namespace mdd {

/// Mono PCM audio with samples scaled to [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 16000;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

/// RIFF/WAVE, 16-bit PCM, one channel. Command pipes ("... |") are rejected.
Waveform LoadWav(const std::string& path);
Waveform ParseWav(const std::string& bytes);

/// Writes 16-bit PCM mono; samples are clipped to [-1, 1].
void SaveWav(const std::string& path, const Waveform& w);

/// Windowed-sinc resampling. Output length is round(n * target / source);
/// a same-rate call returns the input unchanged.
Waveform Resample(const Waveform& w, int target_hz);

}  // namespace mdd
