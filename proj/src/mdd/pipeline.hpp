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

// Pipeline stages over a working directory:
//
//   data/{train,validation,test}/   Kaldi-style dirs, data/manifest.tsv
//   features/feats.ark, feats.index, cmvn.txt, summary.txt
//   lm/phone.arpa
//   exp/model.ckpt (best validation PER), exp/last.ckpt, exp/train.log
//   decode/hyp.<split>.txt
//   eval/report.<split>.txt
//
// Stages throw ValidationError for bad inputs and RuntimeError otherwise.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mdd/config.hpp"
#include "mdd/corpus.hpp"
#include "mdd/synth.hpp"

namespace mdd {

struct StagePaths {
  std::string data_dir;
  std::string manifest;
  std::string features_ark;
  std::string features_index;
  std::string cmvn;
  std::string features_summary;
  std::string lm;
  std::string checkpoint;
  std::string last_checkpoint;
  std::string train_log;

  std::string SplitDir(const std::string& split) const;
  std::string Hypotheses(const std::string& split) const;
  std::string Report(const std::string& split) const;

  static StagePaths For(const std::string& workdir);
};

struct StageReport {
  std::string summary;
  int warnings = 0;
  std::vector<std::string> messages;  // one per warning
};

using ProgressFn = std::function<void(const std::string&)>;

PhonemeAlphabet LoadAlphabet(const PipelineConfig& cfg);
ConfusionTable LoadConfusionTable(const PipelineConfig& cfg, const PhonemeAlphabet& alphabet);

/// Reads the prepared split directories back into one manifest.
CorpusManifest LoadPreparedManifest(const PipelineConfig& cfg, const PhonemeAlphabet& alphabet);

StageReport RunPrepare(const PipelineConfig& cfg);
StageReport RunFeatures(const PipelineConfig& cfg);
StageReport RunTrainLm(const PipelineConfig& cfg);
StageReport RunTrain(const PipelineConfig& cfg, const ProgressFn& progress = {});
StageReport RunDecode(const PipelineConfig& cfg);
StageReport RunEvaluate(const PipelineConfig& cfg);

/// Canonical and augmented sentence-encoder input for up to `limit`
/// training utterances at `epoch`.
StageReport RunAugmentPreview(const PipelineConfig& cfg, int limit, int epoch);

StageReport RunSynthCorpus(const std::string& root, const SynthOptions& opts);

}  // namespace mdd
