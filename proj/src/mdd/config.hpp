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
#include <string>
#include <vector>

#include "mdd/augment.hpp"
#include "mdd/fbank.hpp"
#include "mdd/model.hpp"
#include "mdd/ngram.hpp"

namespace mdd {

/// Everything a pipeline run depends on. The text form is flat
/// "key = value" lines grouped under [section] headers; keys are addressed
/// as "section.key" on the command line.
struct PipelineConfig {
  // [paths]
  std::vector<std::string> corpus;  // comma-separated roots
  std::string workdir = "mdd_work";
  std::string alphabet;         // empty: built-in CMU set
  std::string confusion_table;  // empty: built-in table

  // [general]
  std::uint64_t seed = 1;
  int threads = 1;

  // [features]
  FbankConfig fbank;
  bool norm_vars = true;

  // [model]
  ModelConfig model;

  // [train]
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int epochs = 20;
  int batch_size = 8;
  double stop_at_per = -1.0;

  // [augment]
  AugmentPolicy augment;
  bool freeze_augmentation = false;

  // [lm]
  int lm_order = 2;
  Smoothing lm_smoothing = Smoothing::kWittenBell;

  // [decode]
  int beam = 10;
  double lm_weight = 0.5;
  double insertion_bonus = 0.0;
  bool use_lm = true;
  std::string decode_split = "test";

  /// Parses the text form on top of the defaults; unknown keys are errors.
  static PipelineConfig Parse(const std::string& text);
  static PipelineConfig Load(const std::string& path);

  /// Sets one "section.key" to `value` (command-line override).
  void Set(const std::string& dotted_key, const std::string& value);
  std::string Get(const std::string& dotted_key) const;

  /// Fully resolved configuration in the text form, defaults included.
  std::string Dump() const;

  /// Range checks; throws ValidationError.
  void Validate() const;

  static std::vector<std::string> Keys();
};

}  // namespace mdd
