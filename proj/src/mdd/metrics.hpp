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
#include <optional>
#include <string>
#include <vector>

#include "mdd/corpus.hpp"

namespace mdd {

enum class OpKind { kMatch, kSubstitute, kInsert, kDelete };

struct AlignmentOp {
  OpKind kind = OpKind::kMatch;
  std::optional<PhonemeId> ref;
  std::optional<PhonemeId> hyp;

  bool operator==(const AlignmentOp&) const = default;
};

/// Minimum edit alignment with unit costs. On equal cost the backtrace
/// prefers match, then substitute, then delete, then insert.
std::vector<AlignmentOp> Align(const std::vector<PhonemeId>& ref, const std::vector<PhonemeId>& hyp);

int EditDistance(const std::vector<AlignmentOp>& ops);

struct EditCounts {
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t ref_length = 0;

  std::int64_t errors() const { return substitutions + insertions + deletions; }
  EditCounts& operator+=(const EditCounts& o);
};

EditCounts CountEdits(const std::vector<PhonemeId>& ref, const std::vector<PhonemeId>& hyp);

/// (S + I + D) / |ref|; throws on an empty reference.
double Per(const std::vector<PhonemeId>& ref, const std::vector<PhonemeId>& hyp);

struct MddCounts {
  std::int64_t ta = 0, fr = 0, fa = 0, cd = 0, de = 0;

  std::int64_t tr() const { return cd + de; }
  MddCounts& operator+=(const MddCounts& o);
  bool operator==(const MddCounts&) const = default;
};

/// Classifies every canonical position. With `events` the canonical/actual
/// pairing comes from the annotation, otherwise from Align. Speaker
/// additions and recognizer insertions are not classified, except that a
/// canonical phoneme the speaker deleted is judged against the first
/// recognized insertion at the same place.
MddCounts HierarchicalEval(const std::vector<PhonemeId>& canonical, const std::vector<PhonemeId>& actual,
                           const std::vector<PhonemeId>& recognized,
                           const std::vector<AnnotationEvent>* events = nullptr);

/// 2RP / (R + P); undefined when both are zero.
std::optional<double> FMeasure(double recall, double precision);

struct MddReport {
  MddCounts counts;
  std::optional<double> per;
  std::optional<double> recall;     // TR / (TR + FA)
  std::optional<double> precision;  // TR / (TR + FR)
  std::optional<double> f_measure;
  std::optional<double> ta_rate;  // TA / (TA + FR)
  std::optional<double> fr_rate;  // FR / (TA + FR)
  std::optional<double> fa_rate;  // FA / (FA + TR)
  std::optional<double> cd_rate;  // CD / TR
  std::optional<double> de_rate;  // DE / TR
  std::int64_t utterances = 0;

  /// Human-readable lines followed by a key=value block.
  std::string Format() const;
};

MddReport Summarize(const MddCounts& counts, std::optional<double> per = std::nullopt);

}  // namespace mdd
