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

#include "mdd/ctc.hpp"
#include "mdd/ngram.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mdd;

namespace {

constexpr PhonemeId kC = 0, kA = 1, kT = 2, kB = 3;

Matrix RandomLogits(int frames, int classes, std::mt19937_64& rng) { return test::RandomMatrix(frames, classes, rng, 1.5); }

std::vector<PhonemeId> RandomTarget(int max_len, int labels, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(0, max_len), sym(0, labels - 1);
  std::vector<PhonemeId> t(static_cast<std::size_t>(len(rng)));
  for (auto& x : t) x = sym(rng);
  return t;
}

}  // namespace

TEST_CASE("collapse reproduces the cat examples") {
  const std::vector<std::vector<PhonemeId>> paths = {
      {kC, kC, kC, kC, kB, kA, kA, kA, kB, kT, kT, kT, kT, kB},
      {kC, kC, kB, kA, kA, kB, kT, kB},
      {kC, kC, kB, kA, kB, kT, kB},
  };
  for (const auto& p : paths) CHECK(Collapse(p, kB) == std::vector<PhonemeId>{kC, kA, kT});
  CHECK(Collapse(std::vector<PhonemeId>{kB, kB, kB}, kB).empty());
  CHECK(Collapse(std::vector<PhonemeId>{kA, kA, kB, kA}, kB) == std::vector<PhonemeId>{kA, kA});
}

TEST_CASE("collapse agrees with the reference on random paths") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> sym(0, 3), len(0, 12);
  for (int i = 0; i < 500; ++i) {
    std::vector<PhonemeId> p(static_cast<std::size_t>(len(rng)));
    for (auto& x : p) x = sym(rng);
    CHECK(Collapse(p, 3) == oracle::CollapsePath(p, 3));
  }
}

TEST_CASE("ctc loss on uniform scores") {
  Matrix one = Matrix::Zero(1, 3);
  CHECK(CtcLoss(one, std::vector<PhonemeId>{0}).loss == doctest::Approx(-std::log(1.0 / 3.0)).epsilon(1e-12));
  // Paths a.a, a.b, b.a: 3/9.
  Matrix two = Matrix::Zero(2, 3);
  CHECK(CtcLoss(two, std::vector<PhonemeId>{0}).loss == doctest::Approx(-std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("ctc loss matches path enumeration") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> frames(1, 6), labels(1, 3);
  int compared = 0;
  for (int i = 0; i < 300; ++i) {
    const int v = labels(rng);
    const int t = frames(rng);
    const Matrix logits = RandomLogits(t, v + 1, rng);
    const auto target = RandomTarget(3, v, rng);
    const double p = oracle::PathSumProbability(oracle::Softmax(logits), target);
    const auto r = CtcLoss(logits, target);
    if (p == 0.0) {
      CHECK_FALSE(r.feasible);
      CHECK(std::isinf(r.loss));
      continue;
    }
    REQUIRE(r.feasible);
    CHECK(std::abs(r.loss - (-std::log(p))) <= 1e-10 * std::abs(std::log(p)) + 1e-12);
    CHECK(CtcNegLogLikelihood(LogSoftmaxRows(logits), target) == doctest::Approx(r.loss).epsilon(1e-12));
    ++compared;
  }
  CHECK(compared > 150);
}

TEST_CASE("ctc probabilities over all labelings sum to one") {
  std::mt19937_64 rng(5);
  for (int t = 1; t <= 4; ++t) {
    for (int v = 1; v <= 2; ++v) {
      const Matrix logits = RandomLogits(t, v + 1, rng);
      double total = 0.0;
      for (const auto& [labeling, p] : oracle::LabelingDistribution(oracle::Softmax(logits))) {
        (void)p;
        const auto r = CtcLoss(logits, labeling);
        REQUIRE(r.feasible);
        total += std::exp(-r.loss);
      }
      CHECK(std::abs(total - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("ctc gradient matches finite differences") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix logits = RandomLogits(6, 4, rng);
    const auto target = std::vector<PhonemeId>{0, 2, 2};
    const auto r = CtcLoss(logits, target);
    REQUIRE(r.feasible);
    const Matrix num = test::NumericGradient(logits, [&] { return CtcLoss(logits, target).loss; });
    CHECK(test::MaxRelError(r.grad, num) <= 1e-6);
  }
}

TEST_CASE("infeasible target") {
  const auto r = CtcLoss(Matrix::Zero(2, 3), std::vector<PhonemeId>{0, 0});
  CHECK_FALSE(r.feasible);
  CHECK(std::isinf(r.loss));
  CHECK(r.grad.isZero());
  CHECK(CtcMinFrames(std::vector<PhonemeId>{0, 0}) == 3);
}

TEST_CASE("greedy decode") {
  auto peaked = [](const std::vector<int>& argmax, int classes) {
    Matrix m = Matrix::Constant(static_cast<Eigen::Index>(argmax.size()), classes, -5.0);
    for (std::size_t t = 0; t < argmax.size(); ++t) m(static_cast<Eigen::Index>(t), argmax[t]) = -0.1;
    return m;
  };
  CHECK(GreedyDecode(peaked({kC, kC, kB, kA, kT}, 4)) == std::vector<PhonemeId>{kC, kA, kT});
  CHECK(GreedyDecode(peaked({kB, kB, kB}, 4)).empty());
  CHECK(GreedyDecode(peaked({1}, 4)) == std::vector<PhonemeId>{1});
}

TEST_CASE("beam of width one without LM equals greedy") {
  // Each row's argmax carries most of the mass; with weaker peaks the merged
  // blank-or-repeat mass of a width-one beam can outweigh the argmax symbol.
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> sym(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    Matrix probs(7, 4);
    for (Eigen::Index t = 0; t < probs.rows(); ++t) {
      RowVector rest(4);
      for (int c = 0; c < 4; ++c) rest(c) = u(rng);
      const int top = sym(rng);
      rest(top) = 0.0;
      probs.row(t) = rest / rest.sum() * 0.1;
      probs(t, top) = 0.9;
    }
    const Matrix lp = probs.array().log().matrix();
    BeamOptions o;
    o.beam = 1;
    CHECK(BeamDecode(lp, o).prefix == GreedyDecode(lp));
  }
}

TEST_CASE("unpruned beam returns the most probable labeling") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> frames(1, 5), labels(1, 3);
  for (int i = 0; i < 100; ++i) {
    const int t = frames(rng), v = labels(rng);
    const Matrix logits = RandomLogits(t, v + 1, rng);
    const auto dist = oracle::LabelingDistribution(oracle::Softmax(logits));
    auto best = dist.begin();
    for (auto it = dist.begin(); it != dist.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    BeamOptions o;
    o.beam = static_cast<int>(dist.size());
    o.lm_weight = 0.0;
    const auto r = BeamDecode(LogSoftmaxRows(logits), o);
    CHECK(r.prefix == best->first);
    CHECK(r.ctc_log_prob == doctest::Approx(std::log(best->second)).epsilon(1e-9));
  }
}

TEST_CASE("language model fusion breaks a near tie") {
  const PhonemeAlphabet alphabet({"Z", "S", "D"}, {PhoneClass::kConsonant, PhoneClass::kConsonant, PhoneClass::kConsonant});
  const PhonemeId z = 0, s = 1, d = 2, blank = 3;
  std::vector<std::vector<PhonemeId>> corpus(10, {z, s});
  corpus.push_back({z, d});
  const auto lm = NGramModel::Train(corpus, 2, alphabet);
  REQUIRE(lm.Score({lm.bos(), z}, s) > lm.Score({lm.bos(), z}, d) + 0.5);

  // Frame 0 is clearly Z; frame 1 leans slightly towards D over S.
  Matrix probs(2, 4);
  probs << 0.97, 0.01, 0.01, 0.01,  //
      0.01, 0.48, 0.50, 0.01;
  const Matrix lp = probs.array().log().matrix();
  (void)blank;

  BeamOptions plain;
  plain.beam = 16;
  plain.lm_weight = 0.0;
  CHECK(BeamDecode(lp, plain).prefix == std::vector<PhonemeId>{z, d});

  NGramScorer scorer(lm);
  BeamOptions fused = plain;
  fused.lm = &scorer;
  fused.lm_weight = 1.0;
  const auto r = BeamDecode(lp, fused);
  CHECK(r.prefix == std::vector<PhonemeId>{z, s});

  // Hand-computed fused scores of both candidates.
  auto fused_score = [&](const std::vector<PhonemeId>& seq) {
    const double ln10 = std::log(10.0);
    double lm_ln = 0.0;
    NGramModel::Gram h{lm.bos()};
    for (auto p : seq) {
      lm_ln += lm.Score(h, p) * ln10;
      h.push_back(p);
    }
    lm_ln += lm.Score(h, lm.eos()) * ln10;
    return std::log(oracle::PathSumProbability(probs, seq)) + lm_ln;
  };
  CHECK(fused_score({z, s}) > fused_score({z, d}));
  CHECK(r.score == doctest::Approx(fused_score({z, s})).epsilon(1e-9));
}
