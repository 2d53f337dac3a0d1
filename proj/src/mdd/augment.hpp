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
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mdd/phoneset.hpp"

namespace mdd {

enum class AugmentStrategy { kNone, kRandom, kVowelConsonant, kConfusionPair };

const char* StrategyName(AugmentStrategy s);
AugmentStrategy ParseStrategy(const std::string& name);

struct AugmentPolicy {
  AugmentStrategy strategy = AugmentStrategy::kNone;
  double rate = 0.0;  // per-phoneme perturbation probability
  std::uint64_t seed = 0;

  void Validate() const;
};

/// Phoneme -> confusable phonemes. A target of kDeleteTarget drops the
/// phoneme; `insertions` lists phonemes that may appear between positions.
/// In the text form both use the "sil" marker: "D DH sil" and "sil AH EH".
struct ConfusionTable {
  static constexpr PhonemeId kDeleteTarget = -1;

  std::map<PhonemeId, std::vector<PhonemeId>> entries;
  std::vector<PhonemeId> insertions;

  bool empty() const { return entries.empty() && insertions.empty(); }

  /// Z<->S, DH<->D, IH<->IY, OW<->AO; D, T, R may drop; AH, EH, R, G, IH may
  /// be inserted. Pairs whose phonemes are missing from `alphabet` are left out.
  static ConfusionTable Default(const PhonemeAlphabet& alphabet);
  static ConfusionTable Parse(const std::string& text, const PhonemeAlphabet& alphabet);
  static ConfusionTable Load(const std::string& path, const PhonemeAlphabet& alphabet);
  std::string Serialize(const PhonemeAlphabet& alphabet) const;
};

struct AugmentStats {
  int replaced = 0;
  int inserted = 0;
  int deleted = 0;
};

/// Each position is replaced with probability `rate` by a uniformly drawn
/// different non-silence phoneme; each gap between adjacent positions
/// independently receives a random phoneme with the same probability.
std::vector<PhonemeId> AugmentRandom(const std::vector<PhonemeId>& s, double rate, const PhonemeAlphabet& alphabet,
                                     std::mt19937_64& rng, AugmentStats* stats = nullptr);

/// Replacement drawn from the phoneme's own class; silence is never touched
/// and single-member classes are skipped.
std::vector<PhonemeId> AugmentVowelConsonant(const std::vector<PhonemeId>& s, double rate,
                                             const PhonemeAlphabet& alphabet, std::mt19937_64& rng,
                                             AugmentStats* stats = nullptr);

/// Replacement drawn from the table entry; positions without one are kept.
std::vector<PhonemeId> AugmentConfusion(const std::vector<PhonemeId>& s, double rate, const ConfusionTable& table,
                                        std::mt19937_64& rng, AugmentStats* stats = nullptr);

/// Seed for one utterance in one epoch: seed xor hash(utterance_id), mixed
/// with the epoch so each epoch draws afresh.
std::uint64_t UtteranceSeed(std::uint64_t seed, const std::string& utterance_id, int epoch);

/// Dispatches on the policy's strategy with the per-utterance seed.
std::vector<PhonemeId> Augment(const std::vector<PhonemeId>& s, const AugmentPolicy& policy,
                               const PhonemeAlphabet& alphabet, const ConfusionTable& table,
                               const std::string& utterance_id, int epoch, AugmentStats* stats = nullptr);

}  // namespace mdd
