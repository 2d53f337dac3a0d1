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

#include <span>
#include <vector>

#include "mdd/common.hpp"

namespace mdd {

/// Merges adjacent repeats, then drops blanks.
std::vector<PhonemeId> Collapse(std::span<const PhonemeId> path, PhonemeId blank);

/// Row-wise log-softmax.
Matrix LogSoftmaxRows(const Matrix& logits);

/// Frames needed to emit `target`: its length plus one per adjacent repeat.
int CtcMinFrames(std::span<const PhonemeId> target);

struct CtcLossResult {
  double loss = 0.0;  // -log p(target | logits)
  Matrix grad;        // d loss / d logits
  bool feasible = true;
};

/// Exact CTC negative log-likelihood and its gradient with respect to the
/// raw (pre-softmax) scores. The blank is the last column. An infeasible
/// target yields loss = +inf, a zero gradient and feasible = false.
CtcLossResult CtcLoss(const Matrix& logits, std::span<const PhonemeId> target);

/// Forward-only variant on log-probabilities; returns -log p(target).
double CtcNegLogLikelihood(const Matrix& log_probs, std::span<const PhonemeId> target);

/// Collapse of the per-row argmax (lowest index wins ties).
std::vector<PhonemeId> GreedyDecode(const Matrix& log_probs);

/// Natural-log next-phoneme scorer for shallow fusion. `next` equal to
/// kEndOfSentence asks for the sentence-end probability.
class PhoneLmScorer {
 public:
  static constexpr PhonemeId kEndOfSentence = -1;
  virtual ~PhoneLmScorer() = default;
  virtual double LogProb(std::span<const PhonemeId> history, PhonemeId next) const = 0;
};

struct BeamOptions {
  int beam = 10;
  const PhoneLmScorer* lm = nullptr;
  double lm_weight = 0.5;         // alpha
  double insertion_bonus = 0.0;   // beta, per emitted phoneme
};

struct BeamResult {
  std::vector<PhonemeId> prefix;
  double score = kNegInf;       // ctc + alpha * lm + beta * |prefix|
  double ctc_log_prob = kNegInf;
};

/// CTC prefix beam search. With no pruning (beam at least the number of
/// live prefixes) and no LM it returns the most probable labeling.
BeamResult BeamDecode(const Matrix& log_probs, const BeamOptions& opts);

}  // namespace mdd
