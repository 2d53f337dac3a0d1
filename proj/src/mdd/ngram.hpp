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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mdd/ctc.hpp"
#include "mdd/phoneset.hpp"

namespace mdd {

enum class Smoothing { kWittenBell, kMaximumLikelihood };

/// Backoff phone n-gram model. Word ids 0..V-1 are phonemes, V is <s> and
/// V+1 is </s>. Probabilities are stored as log10, ARPA style.
class NGramModel {
 public:
  using Gram = std::vector<int>;

  struct Entry {
    double log10_prob = 0.0;
    std::optional<double> log10_backoff;
  };

  NGramModel() = default;

  /// Counts over <s> s </s>; Witten-Bell interpolated estimates stored with
  /// backoff weights. In maximum-likelihood mode unigrams exclude </s>.
  static NGramModel Train(const std::vector<std::vector<PhonemeId>>& corpus, int order,
                          const PhonemeAlphabet& alphabet, Smoothing smoothing = Smoothing::kWittenBell);

  static NGramModel ReadArpa(const std::string& text, const PhonemeAlphabet& alphabet);
  static NGramModel LoadArpa(const std::string& path, const PhonemeAlphabet& alphabet);
  std::string WriteArpa() const;
  void SaveArpa(const std::string& path) const;

  int order() const { return order_; }
  int vocab_size() const { return static_cast<int>(words_.size()); }
  int bos() const { return vocab_size() - 2; }
  int eos() const { return vocab_size() - 1; }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }

  /// log10 p(next | history); histories longer than order-1 are truncated
  /// on the left. Unseen grams back off recursively to the unigram.
  double Score(const Gram& history, int next) const;

  /// Sum over every predictable word (phonemes and </s>) of p(w | history).
  double DistributionSum(const Gram& history) const;

  /// Per-token perplexity over sentences scored with <s> ... </s>.
  double Perplexity(const std::vector<std::vector<PhonemeId>>& corpus) const;

  const std::map<Gram, Entry>& grams(int n) const { return grams_.at(static_cast<std::size_t>(n - 1)); }
  std::size_t num_grams(int n) const { return grams(n).size(); }

 private:
  int order_ = 0;
  std::vector<std::string> words_;
  std::vector<std::map<Gram, Entry>> grams_;
};

/// Adapts an NGramModel to the decoder's natural-log scorer interface.
class NGramScorer : public PhoneLmScorer {
 public:
  explicit NGramScorer(const NGramModel& lm) : lm_(lm) {}
  double LogProb(std::span<const PhonemeId> history, PhonemeId next) const override;

 private:
  const NGramModel& lm_;
};

}  // namespace mdd
