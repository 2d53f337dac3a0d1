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

#include <string>
#include <vector>

#include "mdd/corpus.hpp"

namespace mdd {

enum class CorpusLayout { kKaldi, kL2Arctic, kTimit };

/// kKaldi when `root` holds wav.scp, kL2Arctic when speaker dirs hold wav/,
/// kTimit when speaker dirs hold *.PHN files.
CorpusLayout DetectLayout(const std::string& root);

/// Builds a manifest from a corpus root of any supported layout. Bare
/// silence-class labels are dropped from phone tiers.
CorpusManifest IngestCorpus(const std::string& root, const PhonemeAlphabet& alphabet);

/// Folds a TIMIT 61-phone label onto the CMU inventory; empty result means
/// the label is dropped (glottal stop).
std::string FoldTimitPhone(const std::string& label);

/// Concatenates manifests; throws on duplicate utterance ids.
CorpusManifest MergeManifests(const std::vector<CorpusManifest>& parts);

}  // namespace mdd
