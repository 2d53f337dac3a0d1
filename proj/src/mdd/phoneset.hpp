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

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdd/common.hpp"

namespace mdd {

enum class PhoneClass { kVowel, kConsonant, kSilence };

const char* PhoneClassName(PhoneClass c);

inline constexpr const char* kBlankLabel = "<b>";

/// Ordered phoneme inventory. The CTC blank is implicit and sits at index
/// size(), so the network output width is size() + 1.
class PhonemeAlphabet {
 public:
  PhonemeAlphabet() = default;
  PhonemeAlphabet(std::vector<std::string> symbols, std::vector<PhoneClass> classes);

  /// 39 CMU ARPAbet phonemes followed by SIL, SP and ERR.
  static PhonemeAlphabet Default();
  static PhonemeAlphabet Load(const std::string& path);
  static PhonemeAlphabet Parse(const std::string& text);

  std::string Serialize() const;
  void Save(const std::string& path) const;

  int size() const { return static_cast<int>(symbols_.size()); }
  PhonemeId blank_id() const { return static_cast<PhonemeId>(symbols_.size()); }
  int output_dim() const { return size() + 1; }

  const std::string& symbol(PhonemeId id) const;
  PhoneClass Classify(PhonemeId id) const;

  /// Case-insensitive; stress digits (AH0, AH1) fold to the bare symbol.
  std::optional<PhonemeId> Find(const std::string& label) const;
  PhonemeId Lookup(const std::string& label) const;

  std::vector<PhonemeId> MembersOf(PhoneClass c) const;

  /// Maps a whitespace-separated label string onto ids; throws on unknowns.
  std::vector<PhonemeId> Encode(const std::vector<std::string>& labels) const;
  std::vector<std::string> Decode(const std::vector<PhonemeId>& ids) const;

  bool operator==(const PhonemeAlphabet& o) const {
    return symbols_ == o.symbols_ && classes_ == o.classes_;
  }

 private:
  std::vector<std::string> symbols_;
  std::vector<PhoneClass> classes_;
  std::unordered_map<std::string, PhonemeId> index_;
};

/// Normalizes a label: upper-case, trailing stress digit removed.
std::string NormalizeLabel(const std::string& label);

/// Throws unless every id is a valid non-blank phoneme of `alphabet`.
void CheckSequence(const PhonemeAlphabet& alphabet, const std::vector<PhonemeId>& ids);

}  // namespace mdd
