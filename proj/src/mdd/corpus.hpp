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

#include "mdd/phoneset.hpp"

namespace mdd {

enum class EventKind { kCorrect, kSubstitution, kAddition, kDeletion };

const char* EventKindName(EventKind k);

/// One phone-level annotation tag. std::nullopt in cpl/ppl stands for the
/// "sil" marker of the tag template (no phone on that side).
struct AnnotationEvent {
  int index = 0;  // canonical position; additions insert before it
  std::optional<PhonemeId> cpl;
  std::optional<PhonemeId> ppl;
  EventKind kind = EventKind::kCorrect;

  bool operator==(const AnnotationEvent&) const = default;
};

/// Parses "AA", "Z,S,s", "sil,AH,a" or "D,sil,d". The returned index is 0.
AnnotationEvent ParseAnnotationTag(const std::string& tag, const PhonemeAlphabet& alphabet);

std::string FormatAnnotationTag(const AnnotationEvent& ev, const PhonemeAlphabet& alphabet);

/// Tags from a phones tier in order. Assigns canonical indices and returns
/// the canonical sequence (additions contribute nothing to it).
std::vector<AnnotationEvent> EventsFromTags(const std::vector<std::string>& tags,
                                            const PhonemeAlphabet& alphabet,
                                            std::vector<PhonemeId>* canonical);

/// The perceived sequence: substitutions replace, additions insert before
/// their index, deletions remove.
std::vector<PhonemeId> ActualSequence(const std::vector<PhonemeId>& canonical,
                                      const std::vector<AnnotationEvent>& events);

struct Segment {
  std::string recording_id;
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const Segment&) const = default;
};

struct Utterance {
  std::string utterance_id;
  std::string speaker_id;
  std::string wav_path;  // may be a command pipe ("... |")
  std::vector<std::string> words;
  std::vector<PhonemeId> canonical;
  std::optional<Segment> segment;
  std::optional<std::vector<AnnotationEvent>> annotation;

  /// Training target: the annotated actual sequence, else the canonical one.
  std::vector<PhonemeId> Target() const;
};

enum class Split { kTrain, kValidation, kTest };

const char* SplitName(Split s);
Split ParseSplit(const std::string& name);

struct CorpusManifest {
  std::vector<Utterance> utterances;
  std::vector<Split> splits;  // parallel to utterances

  std::size_t size() const { return utterances.size(); }
  /// Throws on duplicate ids, id/speaker mismatch, or bad segments.
  void Validate() const;
  CorpusManifest Subset(Split s) const;
  const Utterance* Find(const std::string& utterance_id) const;
};

/// Reads text, wav.scp, utt2spk (required) and spk2utt, segments, phn_text,
/// annotation (optional).
CorpusManifest ParseKaldiDir(const std::string& dir, const PhonemeAlphabet& alphabet);

/// Writes text, wav.scp, utt2spk, spk2utt, phn_text, plus segments and
/// annotation when any utterance carries them. Sorted by key, LF endings.
void EmitKaldiDir(const CorpusManifest& manifest, const std::string& dir,
                  const PhonemeAlphabet& alphabet);

/// Validation speakers MBMPS YBAA NCC SVBI YDCK THV, test speakers NJS ZHAA
/// TXHC TNI YKWK TLV, everyone else trains.
CorpusManifest DefaultSplit(CorpusManifest manifest);

Split DefaultSplitFor(const std::string& speaker_id);

/// Shortest decimal that round-trips, always with a fractional part ("13.0").
std::string FormatSeconds(double v);

}  // namespace mdd
