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

#include "mdd/ctc.hpp"

#include <algorithm>
#include <map>

namespace mdd {

std::vector<PhonemeId> Collapse(std::span<const PhonemeId> path, PhonemeId blank) {
  std::vector<PhonemeId> out;
  PhonemeId prev = -1;
  for (PhonemeId p : path) {
    if (p != prev && p != blank) out.push_back(p);
    prev = p;
  }
  return out;
}

Matrix LogSoftmaxRows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    double lse = LogSumExp(logits.row(t));
    out.row(t) = logits.row(t).array() - lse;
  }
  return out;
}

int CtcMinFrames(std::span<const PhonemeId> target) {
  int n = static_cast<int>(target.size());
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

namespace {

// Log-space alpha over the blank-interleaved target: alpha(t, s) is the
// log-probability of all prefixes of length t+1 ending in state s.
Matrix ForwardLattice(const Matrix& lp, const std::vector<PhonemeId>& ext) {
  const Eigen::Index t_len = lp.rows();
  const auto s_len = static_cast<Eigen::Index>(ext.size());
  Matrix alpha = Matrix::Constant(t_len, s_len, kNegInf);
  if (t_len == 0) return alpha;
  alpha(0, 0) = lp(0, ext[0]);
  if (s_len > 1) alpha(0, 1) = lp(0, ext[1]);
  for (Eigen::Index t = 1; t < t_len; ++t) {
    for (Eigen::Index s = 0; s < s_len; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAddExp(a, alpha(t - 1, s - 1));
      if (s >= 2 && ext[s] != ext[s - 2]) a = LogAddExp(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, ext[s]);
    }
  }
  return alpha;
}

// beta(t, s): log-probability of emitting the remaining suffix over frames
// t+1..T-1 given state s at frame t (frame t itself excluded).
Matrix BackwardLattice(const Matrix& lp, const std::vector<PhonemeId>& ext) {
  const Eigen::Index t_len = lp.rows();
  const auto s_len = static_cast<Eigen::Index>(ext.size());
  Matrix beta = Matrix::Constant(t_len, s_len, kNegInf);
  if (t_len == 0) return beta;
  beta(t_len - 1, s_len - 1) = 0.0;
  if (s_len > 1) beta(t_len - 1, s_len - 2) = 0.0;
  for (Eigen::Index t = t_len - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < s_len; ++s) {
      double b = beta(t + 1, s) + lp(t + 1, ext[s]);
      if (s + 1 < s_len) b = LogAddExp(b, beta(t + 1, s + 1) + lp(t + 1, ext[s + 1]));
      if (s + 2 < s_len && ext[s + 2] != ext[s]) b = LogAddExp(b, beta(t + 1, s + 2) + lp(t + 1, ext[s + 2]));
      beta(t, s) = b;
    }
  }
  return beta;
}

std::vector<PhonemeId> Extend(std::span<const PhonemeId> target, PhonemeId blank) {
  std::vector<PhonemeId> ext;
  ext.reserve(2 * target.size() + 1);
  ext.push_back(blank);
  for (PhonemeId p : target) {
    ext.push_back(p);
    ext.push_back(blank);
  }
  return ext;
}

void CheckTarget(std::span<const PhonemeId> target, Eigen::Index classes) {
  for (PhonemeId p : target) {
    if (p < 0 || p >= classes - 1) throw ValidationError("ctc: target id out of range (blank or invalid)");
  }
}

double TotalLogProb(const Matrix& alpha) {
  const Eigen::Index t = alpha.rows() - 1;
  const Eigen::Index s = alpha.cols() - 1;
  double total = alpha(t, s);
  if (s >= 1) total = LogAddExp(total, alpha(t, s - 1));
  return total;
}

}  // namespace

double CtcNegLogLikelihood(const Matrix& log_probs, std::span<const PhonemeId> target) {
  CheckTarget(target, log_probs.cols());
  if (log_probs.rows() == 0) return target.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  if (CtcMinFrames(target) > log_probs.rows()) return std::numeric_limits<double>::infinity();
  auto ext = Extend(target, static_cast<PhonemeId>(log_probs.cols() - 1));
  return -TotalLogProb(ForwardLattice(log_probs, ext));
}

CtcLossResult CtcLoss(const Matrix& logits, std::span<const PhonemeId> target) {
  const Eigen::Index t_len = logits.rows();
  const Eigen::Index classes = logits.cols();
  if (classes < 2) throw ValidationError("ctc: need at least one phoneme plus blank");
  CheckTarget(target, classes);
  CtcLossResult res;
  res.grad = Matrix::Zero(t_len, classes);
  if (CtcMinFrames(target) > t_len) {
    res.loss = std::numeric_limits<double>::infinity();
    res.feasible = false;
    return res;
  }
  if (t_len == 0) {
    res.loss = 0.0;
    return res;
  }
  const Matrix lp = LogSoftmaxRows(logits);
  const auto ext = Extend(target, static_cast<PhonemeId>(classes - 1));
  const Matrix alpha = ForwardLattice(lp, ext);
  const Matrix beta = BackwardLattice(lp, ext);
  const double log_p = TotalLogProb(alpha);
  res.loss = -log_p;

  // grad = softmax - occupancy, with occupancy(t, k) summed over states
  // labelled k.
  for (Eigen::Index t = 0; t < t_len; ++t) {
    RowVector occ = RowVector::Constant(classes, kNegInf);
    for (std::size_t s = 0; s < ext.size(); ++s) {
      double v = alpha(t, static_cast<Eigen::Index>(s)) + beta(t, static_cast<Eigen::Index>(s));
      occ[ext[s]] = LogAddExp(occ[ext[s]], v);
    }
    for (Eigen::Index k = 0; k < classes; ++k) {
      double gamma = occ[k] == kNegInf ? 0.0 : std::exp(occ[k] - log_p);
      res.grad(t, k) = std::exp(lp(t, k)) - gamma;
    }
  }
  return res;
}

std::vector<PhonemeId> GreedyDecode(const Matrix& log_probs) {
  std::vector<PhonemeId> path;
  path.reserve(static_cast<std::size_t>(log_probs.rows()));
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < log_probs.cols(); ++k) {
      if (log_probs(t, k) > log_probs(t, best)) best = k;
    }
    path.push_back(static_cast<PhonemeId>(best));
  }
  return Collapse(path, static_cast<PhonemeId>(log_probs.cols() - 1));
}

namespace {

struct PrefixState {
  double log_blank = kNegInf;
  double log_nonblank = kNegInf;
  double lm = 0.0;  // accumulated natural-log LM score of the prefix

  double ctc() const { return LogAddExp(log_blank, log_nonblank); }
};

}  // namespace

BeamResult BeamDecode(const Matrix& log_probs, const BeamOptions& opts) {
  if (opts.beam < 1) throw ValidationError("beam width must be at least 1");
  const Eigen::Index classes = log_probs.cols();
  const auto blank = static_cast<PhonemeId>(classes - 1);
  using Prefix = std::vector<PhonemeId>;

  auto total = [&](const Prefix& p, const PrefixState& st) {
    return st.ctc() + opts.lm_weight * st.lm + opts.insertion_bonus * static_cast<double>(p.size());
  };

  std::map<Prefix, PrefixState> beam;
  beam[Prefix{}] = PrefixState{0.0, kNegInf, 0.0};

  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    std::map<Prefix, PrefixState> next;
    auto slot = [&](const Prefix& p, double lm) -> PrefixState& {
      auto [it, inserted] = next.try_emplace(p);
      if (inserted) it->second.lm = lm;
      return it->second;
    };
    for (const auto& [prefix, st] : beam) {
      const double both = st.ctc();
      PrefixState& same = slot(prefix, st.lm);
      same.log_blank = LogAddExp(same.log_blank, both + log_probs(t, blank));
      for (PhonemeId c = 0; c < blank; ++c) {
        const double p = log_probs(t, c);
        Prefix ext = prefix;
        ext.push_back(c);
        double lm = st.lm;
        if (opts.lm && opts.lm_weight != 0.0) lm += opts.lm->LogProb(prefix, c);
        if (!prefix.empty() && prefix.back() == c) {
          PrefixState& stay = slot(prefix, st.lm);
          stay.log_nonblank = LogAddExp(stay.log_nonblank, st.log_nonblank + p);
          PrefixState& grown = slot(ext, lm);
          grown.log_nonblank = LogAddExp(grown.log_nonblank, st.log_blank + p);
        } else {
          PrefixState& grown = slot(ext, lm);
          grown.log_nonblank = LogAddExp(grown.log_nonblank, both + p);
        }
      }
    }
    std::vector<std::pair<const Prefix*, double>> ranked;
    ranked.reserve(next.size());
    for (const auto& [p, st] : next) ranked.emplace_back(&p, total(p, st));
    // std::map iterates prefixes lexicographically, so a stable sort keeps
    // the lowest-index prefix first among equal scores.
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::map<Prefix, PrefixState> kept;
    for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(opts.beam); ++i) {
      kept.emplace(*ranked[i].first, next[*ranked[i].first]);
    }
    beam = std::move(kept);
  }

  BeamResult best;
  bool have = false;
  for (const auto& [prefix, st] : beam) {
    double lm_end = 0.0;
    if (opts.lm && opts.lm_weight != 0.0) lm_end = opts.lm->LogProb(prefix, PhoneLmScorer::kEndOfSentence);
    double score = total(prefix, st) + opts.lm_weight * lm_end;
    if (!have || score > best.score) {
      best.prefix = prefix;
      best.score = score;
      best.ctc_log_prob = st.ctc();
      have = true;
    }
  }
  return best;
}

}  // namespace mdd
