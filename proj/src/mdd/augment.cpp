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

#include "mdd/augment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mdd {

const char* StrategyName(AugmentStrategy s) {
  switch (s) {
    case AugmentStrategy::kNone: return "none";
    case AugmentStrategy::kRandom: return "random";
    case AugmentStrategy::kVowelConsonant: return "vowel_consonant";
    case AugmentStrategy::kConfusionPair: return "confusion_pair";
  }
  return "none";
}

AugmentStrategy ParseStrategy(const std::string& name) {
  if (name == "none" || name.empty()) return AugmentStrategy::kNone;
  if (name == "random") return AugmentStrategy::kRandom;
  if (name == "vowel_consonant") return AugmentStrategy::kVowelConsonant;
  if (name == "confusion_pair" || name == "confusion") return AugmentStrategy::kConfusionPair;
  throw ValidationError("unknown augmentation strategy '" + name + "'");
}

void AugmentPolicy::Validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("augmentation rate must be in [0, 1]");
}

namespace {

constexpr const char* kSilMarker = "sil";

bool IsSilMarker(const std::string& tok) { return tok == kSilMarker || tok == "SIL" || tok == "-"; }

PhonemeId PickOther(const std::vector<PhonemeId>& pool, PhonemeId current, std::mt19937_64& rng) {
  std::vector<PhonemeId> others;
  for (PhonemeId p : pool) {
    if (p != current) others.push_back(p);
  }
  if (others.empty()) return current;
  std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
  return others[pick(rng)];
}

std::vector<PhonemeId> SpeechPhonemes(const PhonemeAlphabet& alphabet) {
  std::vector<PhonemeId> out;
  for (PhonemeId i = 0; i < alphabet.size(); ++i) {
    if (alphabet.Classify(i) != PhoneClass::kSilence) out.push_back(i);
  }
  return out;
}

}  // namespace

ConfusionTable ConfusionTable::Default(const PhonemeAlphabet& alphabet) {
  static const char* kPairs[][2] = {{"Z", "S"}, {"DH", "D"}, {"IH", "IY"}, {"OW", "AO"}};
  static const char* kDeletable[] = {"D", "T", "R"};
  static const char* kInsertable[] = {"AH", "EH", "R", "G", "IH"};
  ConfusionTable t;
  for (auto& pr : kPairs) {
    auto a = alphabet.Find(pr[0]), b = alphabet.Find(pr[1]);
    if (!a || !b) continue;
    t.entries[*a].push_back(*b);
    t.entries[*b].push_back(*a);
  }
  for (const char* d : kDeletable) {
    if (auto id = alphabet.Find(d)) t.entries[*id].push_back(kDeleteTarget);
  }
  for (const char* ins : kInsertable) {
    if (auto id = alphabet.Find(ins)) t.insertions.push_back(*id);
  }
  return t;
}

ConfusionTable ConfusionTable::Parse(const std::string& text, const PhonemeAlphabet& alphabet) {
  ConfusionTable t;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto toks = SplitWhitespace(line);
    if (toks.empty()) continue;
    const std::string where = "confusion table line " + std::to_string(lineno);
    if (toks.size() < 2) throw ValidationError(where + ": expected SRC DST...");
    auto lookup = [&](const std::string& tok) {
      auto id = alphabet.Find(tok);
      if (!id) throw ValidationError(where + ": unknown phoneme '" + tok + "'");
      return *id;
    };
    if (IsSilMarker(toks[0])) {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (IsSilMarker(toks[i])) throw ValidationError(where + ": sil cannot map to itself");
        t.insertions.push_back(lookup(toks[i]));
      }
      continue;
    }
    const PhonemeId src = lookup(toks[0]);
    auto& dst = t.entries[src];
    for (std::size_t i = 1; i < toks.size(); ++i) {
      const PhonemeId d = IsSilMarker(toks[i]) ? kDeleteTarget : lookup(toks[i]);
      if (d == src) throw ValidationError(where + ": phoneme '" + toks[0] + "' maps to itself");
      dst.push_back(d);
    }
  }
  return t;
}

ConfusionTable ConfusionTable::Load(const std::string& path, const PhonemeAlphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open confusion table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), alphabet);
}

std::string ConfusionTable::Serialize(const PhonemeAlphabet& alphabet) const {
  std::string out;
  for (const auto& [src, dsts] : entries) {
    out += alphabet.symbol(src);
    for (PhonemeId d : dsts) out += " " + (d == kDeleteTarget ? std::string(kSilMarker) : alphabet.symbol(d));
    out += '\n';
  }
  if (!insertions.empty()) {
    out += kSilMarker;
    for (PhonemeId d : insertions) out += " " + alphabet.symbol(d);
    out += '\n';
  }
  return out;
}

std::vector<PhonemeId> AugmentRandom(const std::vector<PhonemeId>& s, double rate, const PhonemeAlphabet& alphabet,
                                     std::mt19937_64& rng, AugmentStats* stats) {
  AugmentStats st;
  const auto pool = SpeechPhonemes(alphabet);
  std::bernoulli_distribution select(rate);
  std::vector<PhonemeId> out;
  out.reserve(s.size() + s.size() / 4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    PhonemeId p = s[i];
    if (select(rng)) {
      const PhonemeId q = PickOther(pool, p, rng);
      if (q != p) ++st.replaced;
      p = q;
    }
    out.push_back(p);
    if (i + 1 < s.size() && select(rng) && !pool.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      out.push_back(pool[pick(rng)]);
      ++st.inserted;
    }
  }
  if (stats) *stats = st;
  return out;
}

std::vector<PhonemeId> AugmentVowelConsonant(const std::vector<PhonemeId>& s, double rate,
                                             const PhonemeAlphabet& alphabet, std::mt19937_64& rng,
                                             AugmentStats* stats) {
  AugmentStats st;
  const auto vowels = alphabet.MembersOf(PhoneClass::kVowel);
  const auto consonants = alphabet.MembersOf(PhoneClass::kConsonant);
  std::bernoulli_distribution select(rate);
  std::vector<PhonemeId> out = s;
  for (auto& p : out) {
    const PhoneClass c = alphabet.Classify(p);
    if (c == PhoneClass::kSilence) continue;
    if (!select(rng)) continue;
    const auto& pool = c == PhoneClass::kVowel ? vowels : consonants;
    if (pool.size() < 2) continue;
    p = PickOther(pool, p, rng);
    ++st.replaced;
  }
  if (stats) *stats = st;
  return out;
}

std::vector<PhonemeId> AugmentConfusion(const std::vector<PhonemeId>& s, double rate, const ConfusionTable& table,
                                        std::mt19937_64& rng, AugmentStats* stats) {
  AugmentStats st;
  std::bernoulli_distribution select(rate);
  std::vector<PhonemeId> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    PhonemeId p = s[i];
    auto it = table.entries.find(p);
    if (it != table.entries.end() && !it->second.empty() && select(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, it->second.size() - 1);
      p = it->second[pick(rng)];
    }
    if (p == ConfusionTable::kDeleteTarget) {
      ++st.deleted;
    } else {
      if (p != s[i]) ++st.replaced;
      out.push_back(p);
    }
    if (i + 1 < s.size() && !table.insertions.empty() && select(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, table.insertions.size() - 1);
      out.push_back(table.insertions[pick(rng)]);
      ++st.inserted;
    }
  }
  // A sentence must keep at least one phoneme for the sentence encoder.
  if (out.empty() && !s.empty()) {
    out.push_back(s.front());
    --st.deleted;
  }
  if (stats) *stats = st;
  return out;
}

std::uint64_t UtteranceSeed(std::uint64_t seed, const std::string& utterance_id, int epoch) {
  std::uint64_t x = seed ^ StableHash(utterance_id);
  // splitmix64 finalizer over the epoch-offset state
  x += 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(epoch + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::vector<PhonemeId> Augment(const std::vector<PhonemeId>& s, const AugmentPolicy& policy,
                               const PhonemeAlphabet& alphabet, const ConfusionTable& table,
                               const std::string& utterance_id, int epoch, AugmentStats* stats) {
  policy.Validate();
  std::mt19937_64 rng(UtteranceSeed(policy.seed, utterance_id, epoch));
  switch (policy.strategy) {
    case AugmentStrategy::kNone: break;
    case AugmentStrategy::kRandom: return AugmentRandom(s, policy.rate, alphabet, rng, stats);
    case AugmentStrategy::kVowelConsonant: return AugmentVowelConsonant(s, policy.rate, alphabet, rng, stats);
    case AugmentStrategy::kConfusionPair: return AugmentConfusion(s, policy.rate, table, rng, stats);
  }
  if (stats) *stats = AugmentStats{};
  return s;
}

}  // namespace mdd
