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

#include <optional>
#include <string>
#include <vector>

namespace mdd {

struct TextGridInterval {
  double xmin = 0.0;
  double xmax = 0.0;
  std::string text;
};

struct TextGridTier {
  std::string name;
  std::vector<TextGridInterval> intervals;
};

/// Interval tiers of a long-format Praat TextGrid. Point tiers are skipped.
struct TextGrid {
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<TextGridTier> tiers;

  const TextGridTier* Tier(const std::string& name) const;

  /// Non-empty interval labels of a tier, in time order.
  std::vector<std::string> Labels(const std::string& tier_name) const;

  static TextGrid Parse(const std::string& text);
  static TextGrid Load(const std::string& path);
  std::string Serialize() const;
};

}  // namespace mdd
