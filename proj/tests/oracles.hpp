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

// Independent reference implementations used by the unit tests and the
// acceptance suite. They favour obviousness over speed.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "mdd/common.hpp"

namespace mdd::oracle {

/// Calls fn(path) for every length-T path over `classes` symbols.
template <typename Fn>
void ForEachPath(int frames, int classes, Fn&& fn) {
  std::vector<PhonemeId> path(static_cast<std::size_t>(frames), 0);
  while (true) {
    fn(path);
    int i = frames - 1;
    while (i >= 0 && path[static_cast<std::size_t>(i)] == classes - 1) {
      path[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) return;
    ++path[static_cast<std::size_t>(i)];
  }
}

/// Textbook collapse: drop repeats of the previous frame, then blanks.
inline std::vector<PhonemeId> CollapsePath(const std::vector<PhonemeId>& path, PhonemeId blank) {
  std::vector<PhonemeId> out;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (t > 0 && path[t] == path[t - 1]) continue;
    if (path[t] != blank) out.push_back(path[t]);
  }
  return out;
}

inline Matrix Softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double m = logits.row(t).maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) z += std::exp(logits(t, c) - m);
    for (Eigen::Index c = 0; c < logits.cols(); ++c) p(t, c) = std::exp(logits(t, c) - m) / z;
  }
  return p;
}

/// p(labeling) for every labeling reachable from frames x classes
/// probabilities (blank = last column), by enumerating all paths.
inline std::map<std::vector<PhonemeId>, double> LabelingDistribution(const Matrix& probs) {
  std::map<std::vector<PhonemeId>, double> dist;
  const auto blank = static_cast<PhonemeId>(probs.cols() - 1);
  ForEachPath(static_cast<int>(probs.rows()), static_cast<int>(probs.cols()), [&](const std::vector<PhonemeId>& path) {
    double p = 1.0;
    for (std::size_t t = 0; t < path.size(); ++t) p *= probs(static_cast<Eigen::Index>(t), path[t]);
    dist[CollapsePath(path, blank)] += p;
  });
  return dist;
}

inline double PathSumProbability(const Matrix& probs, const std::vector<PhonemeId>& target) {
  const auto dist = LabelingDistribution(probs);
  auto it = dist.find(target);
  return it == dist.end() ? 0.0 : it->second;
}

/// Plain recursive Levenshtein distance (no memoization).
inline int EditDistance(const std::vector<PhonemeId>& a, std::size_t i, const std::vector<PhonemeId>& b,
                        std::size_t j) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const int sub = EditDistance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const int del = EditDistance(a, i + 1, b, j) + 1;
  const int ins = EditDistance(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

inline int EditDistance(const std::vector<PhonemeId>& a, const std::vector<PhonemeId>& b) {
  return EditDistance(a, 0, b, 0);
}

inline double FMeasure(double recall, double precision) { return 2.0 * recall * precision / (recall + precision); }

}  // namespace mdd::oracle
