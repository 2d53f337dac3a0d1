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

// Synthetic toy corpus: each phoneme is rendered as a steady source-filter
// segment (glottal pulse train and/or noise through formant resonators), so
// a small model can learn the mapping in minutes on a CPU.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mdd/phoneset.hpp"
#include "mdd/wav.hpp"

namespace mdd {

struct SynthOptions {
  int train_utterances = 20;
  int validation_utterances = 5;
  int test_utterances = 10;
  int min_phonemes = 4;
  int max_phonemes = 8;
  double mispronunciation_rate = 0.1;  // test set only, confusion-pair substitutions
  std::uint64_t seed = 7;
  int sample_rate_hz = 16000;
};

/// AA AO OW IY IH (vowels) and S Z D DH M (consonants).
PhonemeAlphabet ToyAlphabet();

/// Renders `phones` (ids of ToyAlphabet) with per-phoneme durations drawn
/// from `rng`. `bounds`, if given, receives each phoneme's [start, end) in
/// seconds.
Waveform SynthesizeUtterance(const std::vector<PhonemeId>& phones, int sample_rate_hz, std::mt19937_64& rng,
                             std::vector<std::pair<double, double>>* bounds = nullptr);

struct SynthSummary {
  int utterances = 0;
  int mispronounced_positions = 0;
  int total_test_positions = 0;
};

/// Writes an L2-Arctic style tree under `root`: speaker TOY1 (training,
/// phone alignments under textgrid/), MBMPS (validation) and NJS (test,
/// annotated with confusion-pair substitutions under annotation/), plus
/// phones.txt holding the alphabet.
SynthSummary WriteToyCorpus(const std::string& root, const SynthOptions& opts);

}  // namespace mdd
