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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mdd/augment.hpp"
#include "mdd/model.hpp"

namespace mdd {

struct TrainExample {
  std::string utterance_id;
  Matrix features;                  // T x input_dim, normalized and stacked
  std::vector<PhonemeId> canonical; // sentence-encoder input before augmentation
  std::vector<PhonemeId> target;    // CTC target (actual pronunciation)
};

struct TrainOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
  int epochs = 20;
  int batch_size = 8;
  std::uint64_t seed = 1;
  AugmentPolicy augment;
  bool freeze_augmentation = false;  // draw once (epoch 0) instead of every epoch
  double stop_at_per = -1.0;         // stop once validation PER <= this value
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;     // mean CTC loss per feasible utterance
  double val_per = 0.0;  // greedy-decoding PER on the validation set
  int skipped = 0;       // utterances with targets longer than T' allows

  /// "epoch loss val_per" with fixed formatting.
  std::string Format() const;
};

struct TrainResult {
  AcousticModel best;
  AcousticModel last;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_per = 0.0;
};

/// Greedy-decoding PER of `model` over `data` (eval mode).
double EvaluatePer(AcousticModel& model, const std::vector<TrainExample>& data);

/// Adam with global-norm clipping over length-bucketed batches. Validation
/// falls back to the training set when `validation` is empty. Single
/// threaded and deterministic for a fixed seed. Throws RuntimeError when
/// the loss or gradient stops being finite.
TrainResult Train(AcousticModel model, const std::vector<TrainExample>& train,
                  const std::vector<TrainExample>& validation, const TrainOptions& opts,
                  const PhonemeAlphabet& alphabet, const ConfusionTable& table,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace mdd
