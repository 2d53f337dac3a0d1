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

#include <cstdint>
#include <string>
#include <vector>

#include "mdd/common.hpp"
#include "mdd/wav.hpp"

namespace mdd {

struct FbankConfig {
  int sample_rate_hz = 16000;
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int num_mel_bins = 80;
  double low_freq_hz = 20.0;
  double high_freq_hz = 0.0;  // <= 0 means offset from Nyquist
  double log_floor = 1e-10;

  int window_samples() const;
  int hop_samples() const;
  int fft_size() const;
  /// num_mel_bins + 1 (energy appended last).
  int feature_dim() const { return num_mel_bins + 1; }
};

struct FeatureMatrix {
  Matrix frames;  // T x D
  double frame_shift_s = 0.01;
  double frame_length_s = 0.025;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

/// HTK-style mel scale, 2595 log10(1 + f / 700).
double HzToMel(double hz);
double MelToHz(double mel);

/// Center frequency (Hz) of each triangular filter.
std::vector<double> MelCenterFrequencies(const FbankConfig& cfg);

/// Per frame: num_mel_bins log-mel energies of the Hamming-windowed frame,
/// then the log raw-frame energy. T = 1 + floor((N - win) / hop).
FeatureMatrix ComputeFbank(const Waveform& w, const FbankConfig& cfg);

/// Running first and second moments; partial stats merge by addition.
struct CmvnStats {
  std::int64_t count = 0;
  Vector sum;
  Vector sum_sq;

  void Accumulate(const FeatureMatrix& feat);
  void Merge(const CmvnStats& other);
  Vector Mean() const;
  /// Biased variance, clamped at zero.
  Vector Variance() const;

  std::string Serialize() const;
  static CmvnStats Parse(const std::string& text);
  void Save(const std::string& path) const;
  static CmvnStats Load(const std::string& path);
};

CmvnStats AccumulateCmvn(const std::vector<FeatureMatrix>& feats);

inline constexpr double kCmvnVarianceFloor = 1e-8;

FeatureMatrix ApplyCmvn(const FeatureMatrix& feat, const CmvnStats& stats, bool norm_vars);

/// Row t becomes [frame t-1, frame t, frame t+1] with edge replication.
FeatureMatrix StackFrames(const FeatureMatrix& feat, int context = 1);

}  // namespace mdd
