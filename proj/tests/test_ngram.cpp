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
#include <set>
#include <sstream>

#include "mdd/ngram.hpp"
#include "test_util.hpp"

using namespace mdd;

namespace {

PhonemeAlphabet Abc() {
  return PhonemeAlphabet({"A", "B", "C"}, {PhoneClass::kVowel, PhoneClass::kConsonant, PhoneClass::kConsonant});
}

// Interpolated Witten-Bell written directly from its recursive definition.
struct WittenBellOracle {
  int order;
  int predictable;  // phonemes plus </s>
  int bos, eos;
  std::map<std::vector<int>, double> count;  // every gram up to `order`

  WittenBellOracle(const std::vector<std::vector<PhonemeId>>& corpus, int n, int vocab) : order(n) {
    bos = vocab;
    eos = vocab + 1;
    predictable = vocab + 1;
    for (const auto& s : corpus) {
      std::vector<int> toks{bos};
      toks.insert(toks.end(), s.begin(), s.end());
      toks.push_back(eos);
      for (std::size_t i = 1; i < toks.size(); ++i) {
        for (int len = 1; len <= order && static_cast<std::size_t>(len) <= i + 1; ++len) {
          count[std::vector<int>(toks.begin() + static_cast<long>(i + 1 - len), toks.begin() + static_cast<long>(i + 1))] += 1;
        }
      }
    }
  }

  double P(std::vector<int> h, int w) const {
    if (h.size() > static_cast<std::size_t>(order - 1)) h.erase(h.begin(), h.end() - (order - 1));
    if (h.empty()) {
      double n = 0, types = 0;
      for (const auto& [g, c] : count) {
        if (g.size() == 1) {
          n += c;
          ++types;
        }
      }
      auto it = count.find({w});
      const double c = it == count.end() ? 0.0 : it->second;
      return (c + types / predictable) / (n + types);
    }
    double ch = 0, types = 0, chw = 0;
    for (const auto& [g, c] : count) {
      if (g.size() == h.size() + 1 && std::equal(h.begin(), h.end(), g.begin())) {
        ch += c;
        ++types;
        if (g.back() == w) chw = c;
      }
    }
    const std::vector<int> shorter(h.begin() + 1, h.end());
    if (ch == 0) return P(shorter, w);
    return (chw + types * P(shorter, w)) / (ch + types);
  }
};

std::set<NGramModel::Gram> Histories(const NGramModel& lm) {
  std::set<NGramModel::Gram> out{{}};
  for (int n = 1; n < lm.order(); ++n) {
    for (const auto& [g, e] : lm.grams(n)) {
      if (g.back() != lm.eos()) out.insert(g);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("maximum likelihood estimates") {
  const auto abc = Abc();
  const auto bigram = NGramModel::Train({{0, 1}}, 2, abc, Smoothing::kMaximumLikelihood);
  CHECK(std::pow(10.0, bigram.Score({0}, 1)) == doctest::Approx(1.0));
  const auto unigram = NGramModel::Train({{0, 0, 1}}, 1, abc, Smoothing::kMaximumLikelihood);
  CHECK(std::pow(10.0, unigram.Score({}, 0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::pow(10.0, unigram.Score({}, 1)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("witten-bell matches the recursive definition") {
  const auto abc = Abc();
  const std::vector<std::vector<PhonemeId>> corpus = {{0, 1, 2}, {0, 2}, {1, 1, 0}};
  for (int order = 1; order <= 3; ++order) {
    const auto lm = NGramModel::Train(corpus, order, abc);
    const WittenBellOracle ref(corpus, order, abc.size());
    const std::vector<std::vector<int>> histories = {{}, {3}, {0}, {1}, {2}, {3, 0}, {0, 1}, {1, 1}, {2, 2}, {0, 0}};
    for (const auto& h : histories) {
      for (int w = 0; w < lm.vocab_size(); ++w) {
        if (w == lm.bos()) continue;
        const double got = lm.Score(h, w);
        CHECK(std::isfinite(got));
        CHECK(std::pow(10.0, got) == doctest::Approx(ref.P(h, w)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("unseen bigram backs off to the weighted unigram") {
  const auto abc = Abc();
  const std::vector<std::vector<PhonemeId>> corpus = {{0, 1}, {0, 1}, {2}};
  const auto lm = NGramModel::Train(corpus, 2, abc);
  // History A has one continuation type (B) seen twice.
  const double bow = 1.0 / (2.0 + 1.0);
  CHECK(lm.grams(1).at({0}).log10_backoff.has_value());
  CHECK(std::pow(10.0, lm.Score({0}, 2)) == doctest::Approx(bow * std::pow(10.0, lm.Score({}, 2))).epsilon(1e-12));
}

TEST_CASE("conditional distributions sum to one") {
  std::mt19937_64 rng(4);
  const PhonemeAlphabet alpha = PhonemeAlphabet::Default();
  std::uniform_int_distribution<int> sym(0, 9), len(1, 8);
  std::vector<std::vector<PhonemeId>> corpus(40);
  for (auto& s : corpus) {
    s.resize(static_cast<std::size_t>(len(rng)));
    for (auto& p : s) p = sym(rng);
  }
  for (int order = 1; order <= 4; ++order) {
    for (auto sm : {Smoothing::kWittenBell, Smoothing::kMaximumLikelihood}) {
      const auto lm = NGramModel::Train(corpus, order, alpha, sm);
      const auto hist = Histories(lm);
      for (const auto& h : hist) {
        CHECK(std::abs(lm.DistributionSum(h) - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("ARPA round trip") {
  const PhonemeAlphabet alpha = PhonemeAlphabet::Default();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> sym(0, 15), len(1, 10);
  std::vector<std::vector<PhonemeId>> corpus(30);
  for (auto& s : corpus) {
    s.resize(static_cast<std::size_t>(len(rng)));
    for (auto& p : s) p = sym(rng);
  }
  const auto lm = NGramModel::Train(corpus, 3, alpha);
  const std::string text = lm.WriteArpa();
  const auto back = NGramModel::ReadArpa(text, alpha);
  REQUIRE(back.order() == 3);
  for (int n = 1; n <= 3; ++n) {
    REQUIRE(back.num_grams(n) == lm.num_grams(n));
    for (const auto& [g, e] : lm.grams(n)) {
      const auto& f = back.grams(n).at(g);
      if (std::isfinite(e.log10_prob)) CHECK(std::abs(f.log10_prob - e.log10_prob) <= 1e-6);
      CHECK(f.log10_backoff.has_value() == e.log10_backoff.has_value());
      if (e.log10_backoff) CHECK(std::abs(*f.log10_backoff - *e.log10_backoff) <= 1e-6);
    }
  }
  for (const auto& h : Histories(lm)) {
    for (int w = 0; w < lm.vocab_size(); ++w) {
      if (w != lm.bos()) CHECK(std::abs(back.Score(h, w) - lm.Score(h, w)) <= 1e-6);
    }
  }
  CHECK(back.WriteArpa() == text);

  // Header counts equal the emitted lines of each order.
  std::istringstream is(text);
  std::string line;
  std::map<int, int> declared, found;
  int current = 0;
  while (std::getline(is, line)) {
    int n = 0, c = 0;
    if (std::sscanf(line.c_str(), "ngram %d=%d", &n, &c) == 2) declared[n] = c;
    else if (std::sscanf(line.c_str(), "\\%d-grams:", &n) == 1) current = n;
    else if (current > 0 && !line.empty() && line != "\\end\\") ++found[current];
  }
  CHECK(declared == found);

  test::TempDir dir("arpa");
  lm.SaveArpa(dir.str("lm.arpa"));
  CHECK(NGramModel::LoadArpa(dir.str("lm.arpa"), alpha).WriteArpa() == text);
}

TEST_CASE("ARPA parse errors") {
  const auto abc = Abc();
  const auto lm = NGramModel::Train({{0, 1}}, 2, abc);
  std::string text = lm.WriteArpa();
  const std::string truncated = text.substr(0, text.find("\\end\\"));
  CHECK_THROWS_AS(NGramModel::ReadArpa(truncated, abc), ValidationError);
  std::string wrong_count = text;
  wrong_count.replace(wrong_count.find("ngram 1="), 9, "ngram 1=9");
  CHECK_THROWS_AS(NGramModel::ReadArpa(wrong_count, abc), ValidationError);
  CHECK_THROWS_AS(NGramModel::ReadArpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-1.0\tQQ\n\\end\\\n", abc), ValidationError);
}
