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

#include <doctest.h>

#include <cmath>
#include <random>

#include "mdd/augment.hpp"
#include "test_util.hpp"

using namespace mdd;

namespace {

std::vector<PhonemeId> SpeechSequence(const PhonemeAlphabet& a, std::size_t n, std::mt19937_64& rng) {
  std::vector<PhonemeId> speech = a.MembersOf(PhoneClass::kVowel);
  const auto cons = a.MembersOf(PhoneClass::kConsonant);
  speech.insert(speech.end(), cons.begin(), cons.end());
  std::uniform_int_distribution<std::size_t> pick(0, speech.size() - 1);
  std::vector<PhonemeId> s(n);
  for (auto& p : s) p = speech[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("rate zero is the identity") {
  const auto a = PhonemeAlphabet::Default();
  const auto table = ConfusionTable::Default(a);
  std::mt19937_64 rng(1);
  const auto s = SpeechSequence(a, 50, rng);
  CHECK(AugmentRandom(s, 0.0, a, rng) == s);
  CHECK(AugmentVowelConsonant(s, 0.0, a, rng) == s);
  CHECK(AugmentConfusion(s, 0.0, table, rng) == s);
  AugmentPolicy none;
  CHECK(Augment(s, none, a, table, "u", 0) == s);
}

TEST_CASE("random replacement never keeps the phoneme") {
  const PhonemeAlphabet two({"A", "B"}, {PhoneClass::kVowel, PhoneClass::kConsonant});
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) CHECK(AugmentRandom({0}, 1.0, two, rng) == std::vector<PhonemeId>{1});
}

TEST_CASE("random replacement count is binomial") {
  const auto a = PhonemeAlphabet::Default();
  std::mt19937_64 rng(3);
  const auto s = SpeechSequence(a, 10000, rng);
  AugmentStats stats;
  const auto out = AugmentRandom(s, 0.1, a, rng, &stats);
  // Binomial(10000, 0.1): sd = 30.
  CHECK(std::abs(stats.replaced - 1000) <= 90);
  CHECK(std::abs(stats.inserted - 1000) <= 90);
  CHECK(out.size() == s.size() + static_cast<std::size_t>(stats.inserted));
  for (auto p : out) CHECK(a.Classify(p) != PhoneClass::kSilence);
}

TEST_CASE("vowel-consonant replacement preserves the class") {
  const auto a = PhonemeAlphabet::Default();
  std::mt19937_64 rng(4);
  auto s = SpeechSequence(a, 20, rng);
  s.push_back(a.Lookup("SIL"));
  for (int trial = 0; trial < 1000; ++trial) {
    const auto out = AugmentVowelConsonant(s, 0.5, a, rng);
    REQUIRE(out.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(a.Classify(out[i]) == a.Classify(s[i]));
    CHECK(out.back() == s.back());
  }
  const PhonemeAlphabet one_vowel({"AA", "S", "Z"}, {PhoneClass::kVowel, PhoneClass::kConsonant, PhoneClass::kConsonant});
  const auto out = AugmentVowelConsonant({0, 1, 0, 2}, 1.0, one_vowel, rng);
  CHECK(out == std::vector<PhonemeId>{0, 2, 0, 1});
}

TEST_CASE("confusion-pair replacement") {
  const auto a = PhonemeAlphabet::Default();
  const auto table = ConfusionTable::Default(a);
  REQUIRE(table.entries.count(a.Lookup("Z")));
  CHECK(table.entries.at(a.Lookup("Z")) == std::vector<PhonemeId>{a.Lookup("S")});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    CHECK(AugmentConfusion({a.Lookup("Z")}, 1.0, table, rng) == std::vector<PhonemeId>{a.Lookup("S")});
  }
  const auto s = SpeechSequence(a, 40, rng);
  CHECK(AugmentConfusion(s, 1.0, ConfusionTable{}, rng) == s);

  // Deletion never empties the sequence.
  const auto d = a.Lookup("D");
  for (int i = 0; i < 50; ++i) CHECK_FALSE(AugmentConfusion({d, d, d}, 1.0, table, rng).empty());
}

TEST_CASE("confusion table text form") {
  const auto a = PhonemeAlphabet::Default();
  const auto t = ConfusionTable::Parse("# pairs\nZ S\nD DH sil\nsil AH EH\n", a);
  CHECK(t.entries.at(a.Lookup("Z")) == std::vector<PhonemeId>{a.Lookup("S")});
  CHECK(t.entries.at(a.Lookup("D")) == std::vector<PhonemeId>{a.Lookup("DH"), ConfusionTable::kDeleteTarget});
  CHECK(t.insertions == std::vector<PhonemeId>{a.Lookup("AH"), a.Lookup("EH")});
  const auto back = ConfusionTable::Parse(t.Serialize(a), a);
  CHECK(back.entries == t.entries);
  CHECK(back.insertions == t.insertions);
  CHECK_THROWS_AS(ConfusionTable::Parse("Z Z\n", a), ValidationError);
  CHECK_THROWS_AS(ConfusionTable::Parse("Z QQ\n", a), ValidationError);

  const PhonemeAlphabet small({"Z", "S"}, {PhoneClass::kConsonant, PhoneClass::kConsonant});
  const auto d = ConfusionTable::Default(small);
  CHECK(d.entries.size() == 2);
  CHECK(d.insertions.empty());
}

TEST_CASE("per-utterance seeding") {
  const auto a = PhonemeAlphabet::Default();
  const auto table = ConfusionTable::Default(a);
  std::mt19937_64 rng(6);
  const auto s = SpeechSequence(a, 30, rng);
  AugmentPolicy p;
  p.strategy = AugmentStrategy::kRandom;
  p.rate = 0.3;
  p.seed = 9;
  CHECK(Augment(s, p, a, table, "utt1", 0) == Augment(s, p, a, table, "utt1", 0));
  CHECK(Augment(s, p, a, table, "utt1", 0) != Augment(s, p, a, table, "utt1", 1));
  CHECK(Augment(s, p, a, table, "utt1", 0) != Augment(s, p, a, table, "utt2", 0));
  CHECK(UtteranceSeed(9, "utt1", 0) != UtteranceSeed(10, "utt1", 0));
  CHECK(ParseStrategy(StrategyName(AugmentStrategy::kVowelConsonant)) == AugmentStrategy::kVowelConsonant);
  p.rate = 1.5;
  CHECK_THROWS_AS(p.Validate(), ValidationError);
}
