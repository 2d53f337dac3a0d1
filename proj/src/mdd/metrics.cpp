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

#include "mdd/metrics.hpp"

#include <algorithm>
#include <cstdio>

namespace mdd {

std::vector<AlignmentOp> Align(const std::vector<PhonemeId>& ref, const std::vector<PhonemeId>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<int> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> int& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<AlignmentOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      ops.push_back({OpKind::kMatch, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] && at(i, j) == at(i - 1, j - 1) + 1) {
      ops.push_back({OpKind::kSubstitute, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ops.push_back({OpKind::kDelete, ref[i - 1], std::nullopt});
      --i;
    } else {
      ops.push_back({OpKind::kInsert, std::nullopt, hyp[j - 1]});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

int EditDistance(const std::vector<AlignmentOp>& ops) {
  return static_cast<int>(std::count_if(ops.begin(), ops.end(), [](auto& o) { return o.kind != OpKind::kMatch; }));
}

EditCounts& EditCounts::operator+=(const EditCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  ref_length += o.ref_length;
  return *this;
}

EditCounts CountEdits(const std::vector<PhonemeId>& ref, const std::vector<PhonemeId>& hyp) {
  EditCounts c;
  c.ref_length = static_cast<std::int64_t>(ref.size());
  for (const auto& op : Align(ref, hyp)) {
    if (op.kind == OpKind::kSubstitute) ++c.substitutions;
    else if (op.kind == OpKind::kInsert) ++c.insertions;
    else if (op.kind == OpKind::kDelete) ++c.deletions;
  }
  return c;
}

double Per(const std::vector<PhonemeId>& ref, const std::vector<PhonemeId>& hyp) {
  if (ref.empty()) throw ValidationError("per: empty reference");
  const EditCounts c = CountEdits(ref, hyp);
  return static_cast<double>(c.errors()) / static_cast<double>(c.ref_length);
}

MddCounts& MddCounts::operator+=(const MddCounts& o) {
  ta += o.ta;
  fr += o.fr;
  fa += o.fa;
  cd += o.cd;
  de += o.de;
  return *this;
}

namespace {

// Where a canonical phoneme landed in the actual sequence: an index, or
// (for a speaker deletion) the gap before actual index `gap`.
struct Slot {
  std::optional<std::size_t> index;
  std::size_t gap = 0;
};

std::vector<Slot> SlotsFromAlignment(const std::vector<AlignmentOp>& ops) {
  std::vector<Slot> slots;
  std::size_t a = 0;
  for (const auto& op : ops) {
    switch (op.kind) {
      case OpKind::kMatch:
      case OpKind::kSubstitute: slots.push_back({a++, 0}); break;
      case OpKind::kDelete: slots.push_back({std::nullopt, a}); break;
      case OpKind::kInsert: ++a; break;
    }
  }
  return slots;
}

std::vector<Slot> SlotsFromEvents(const std::vector<AnnotationEvent>& events, std::size_t canonical_len) {
  std::vector<Slot> slots(canonical_len);
  std::vector<bool> filled(canonical_len, false);
  // Events are ordered by canonical index with additions placed before it.
  std::vector<AnnotationEvent> sorted = events;
  std::stable_sort(sorted.begin(), sorted.end(), [](const AnnotationEvent& x, const AnnotationEvent& y) {
    if (x.index != y.index) return x.index < y.index;
    return x.kind == EventKind::kAddition && y.kind != EventKind::kAddition;
  });
  std::size_t a = 0;
  for (const auto& ev : sorted) {
    if (ev.kind == EventKind::kAddition) {
      ++a;
      continue;
    }
    const auto i = static_cast<std::size_t>(ev.index);
    if (i >= canonical_len || filled[i]) throw ValidationError("hierarchical eval: annotation does not match canonical");
    filled[i] = true;
    if (ev.kind == EventKind::kDeletion) {
      slots[i] = {std::nullopt, a};
    } else {
      slots[i] = {a++, 0};
    }
  }
  for (std::size_t i = 0; i < canonical_len; ++i) {
    if (!filled[i]) slots[i] = {a++, 0};
  }
  return slots;
}

}  // namespace

MddCounts HierarchicalEval(const std::vector<PhonemeId>& canonical, const std::vector<PhonemeId>& actual,
                           const std::vector<PhonemeId>& recognized, const std::vector<AnnotationEvent>* events) {
  const std::vector<Slot> slots =
      events ? SlotsFromEvents(*events, canonical.size()) : SlotsFromAlignment(Align(canonical, actual));

  // Recognized phoneme per actual index, and recognizer insertions per gap.
  std::vector<std::optional<PhonemeId>> rec_of(actual.size());
  std::vector<std::vector<PhonemeId>> inserted(actual.size() + 1);
  std::size_t a = 0;
  for (const auto& op : Align(actual, recognized)) {
    switch (op.kind) {
      case OpKind::kMatch:
      case OpKind::kSubstitute: rec_of[a++] = op.hyp; break;
      case OpKind::kDelete: rec_of[a++] = std::nullopt; break;
      case OpKind::kInsert: inserted[a].push_back(*op.hyp); break;
    }
  }
  std::vector<std::size_t> claimed(actual.size() + 1, 0);

  MddCounts c;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    const PhonemeId can = canonical[i];
    const Slot& s = slots[i];
    std::optional<PhonemeId> act, rec;
    if (s.index) {
      if (*s.index >= actual.size()) throw ValidationError("hierarchical eval: annotation does not match actual");
      act = actual[*s.index];
      rec = rec_of[*s.index];
    } else {
      auto& k = claimed[s.gap];
      if (k < inserted[s.gap].size()) rec = inserted[s.gap][k++];
    }
    if (act && *act == can) {
      if (rec == can) ++c.ta;
      else ++c.fr;
    } else if (rec == can) {
      ++c.fa;
    } else if (rec == act) {
      ++c.cd;
    } else {
      ++c.de;
    }
  }
  return c;
}

std::optional<double> FMeasure(double recall, double precision) {
  if (recall + precision <= 0.0) return std::nullopt;
  return 2.0 * recall * precision / (recall + precision);
}

namespace {

std::optional<double> Ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string Percent(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
  return buf;
}

std::string Plain(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

MddReport Summarize(const MddCounts& counts, std::optional<double> per) {
  MddReport r;
  r.counts = counts;
  r.per = per;
  const std::int64_t tr = counts.tr();
  r.recall = Ratio(tr, tr + counts.fa);
  r.precision = Ratio(tr, tr + counts.fr);
  if (r.recall && r.precision) r.f_measure = FMeasure(*r.recall, *r.precision);
  r.ta_rate = Ratio(counts.ta, counts.ta + counts.fr);
  r.fr_rate = Ratio(counts.fr, counts.ta + counts.fr);
  r.fa_rate = Ratio(counts.fa, counts.fa + tr);
  r.cd_rate = Ratio(counts.cd, tr);
  r.de_rate = Ratio(counts.de, tr);
  return r;
}

std::string MddReport::Format() const {
  std::string out;
  auto line = [&](const std::string& s) { out += s + '\n'; };
  line("utterances: " + std::to_string(utterances));
  line("PER: " + Percent(per));
  line("correct pronunciations: TA " + std::to_string(counts.ta) + " (" + Percent(ta_rate) + "), FR " +
       std::to_string(counts.fr) + " (" + Percent(fr_rate) + ")");
  line("mispronunciations: FA " + std::to_string(counts.fa) + " (" + Percent(fa_rate) + "), TR " +
       std::to_string(counts.tr()) + " (" + Percent(recall) + ")");
  line("diagnosis: CD " + std::to_string(counts.cd) + " (" + Percent(cd_rate) + "), DE " + std::to_string(counts.de) +
       " (" + Percent(de_rate) + ")");
  line("recall " + Percent(recall) + ", precision " + Percent(precision) + ", F-measure " + Percent(f_measure));
  line("");
  line("[report]");
  line("utterances=" + std::to_string(utterances));
  line("per=" + Plain(per));
  line("ta=" + std::to_string(counts.ta));
  line("fr=" + std::to_string(counts.fr));
  line("fa=" + std::to_string(counts.fa));
  line("cd=" + std::to_string(counts.cd));
  line("de=" + std::to_string(counts.de));
  line("recall=" + Plain(recall));
  line("precision=" + Plain(precision));
  line("f_measure=" + Plain(f_measure));
  line("ta_rate=" + Plain(ta_rate));
  line("fr_rate=" + Plain(fr_rate));
  line("fa_rate=" + Plain(fa_rate));
  line("cd_rate=" + Plain(cd_rate));
  line("de_rate=" + Plain(de_rate));
  return out;
}

}  // namespace mdd
