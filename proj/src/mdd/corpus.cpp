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

#include "mdd/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace mdd {

const char* EventKindName(EventKind k) {
  switch (k) {
    case EventKind::kCorrect: return "correct";
    case EventKind::kSubstitution: return "substitution";
    case EventKind::kAddition: return "addition";
    case EventKind::kDeletion: return "deletion";
  }
  return "?";
}

AnnotationEvent ParseAnnotationTag(const std::string& raw, const PhonemeAlphabet& alphabet) {
  std::string tag = Trim(raw);
  AnnotationEvent ev;
  if (tag.find(',') == std::string::npos) {
    auto id = alphabet.Find(tag);
    if (!id) throw ValidationError("annotation tag '" + raw + "': unknown phoneme label");
    ev.cpl = ev.ppl = *id;
    ev.kind = EventKind::kCorrect;
    return ev;
  }
  std::vector<std::string> fields;
  std::stringstream ss(tag);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(Trim(f));
  if (tag.back() == ',') fields.emplace_back();
  if (fields.size() != 3) throw ValidationError("annotation tag '" + raw + "': expected CPL,PPL,kind");

  auto side = [&](const std::string& label) -> std::optional<PhonemeId> {
    if (ToUpper(label) == "SIL") return std::nullopt;
    auto id = alphabet.Find(label);
    if (!id) throw ValidationError("annotation tag '" + raw + "': unknown phoneme label '" + label + "'");
    return *id;
  };
  ev.cpl = side(fields[0]);
  ev.ppl = side(fields[1]);
  std::string kind = ToUpper(fields[2]);
  if (kind == "S") {
    if (!ev.cpl || !ev.ppl) throw ValidationError("annotation tag '" + raw + "': substitution with sil");
    if (*ev.cpl == *ev.ppl) throw ValidationError("annotation tag '" + raw + "': substitution of identical phonemes");
    ev.kind = EventKind::kSubstitution;
  } else if (kind == "A") {
    if (ev.cpl || !ev.ppl) throw ValidationError("annotation tag '" + raw + "': addition must read sil,PPL,a");
    ev.kind = EventKind::kAddition;
  } else if (kind == "D") {
    if (!ev.cpl || ev.ppl) throw ValidationError("annotation tag '" + raw + "': deletion must read CPL,sil,d");
    ev.kind = EventKind::kDeletion;
  } else {
    throw ValidationError("annotation tag '" + raw + "': unknown error kind '" + fields[2] + "'");
  }
  return ev;
}

std::string FormatAnnotationTag(const AnnotationEvent& ev, const PhonemeAlphabet& alphabet) {
  auto side = [&](const std::optional<PhonemeId>& id) {
    return id ? alphabet.symbol(*id) : std::string("sil");
  };
  switch (ev.kind) {
    case EventKind::kCorrect: return alphabet.symbol(*ev.cpl);
    case EventKind::kSubstitution: return side(ev.cpl) + "," + side(ev.ppl) + ",s";
    case EventKind::kAddition: return "sil," + side(ev.ppl) + ",a";
    case EventKind::kDeletion: return side(ev.cpl) + ",sil,d";
  }
  return "";
}

std::vector<AnnotationEvent> EventsFromTags(const std::vector<std::string>& tags,
                                            const PhonemeAlphabet& alphabet,
                                            std::vector<PhonemeId>* canonical) {
  std::vector<AnnotationEvent> events;
  std::vector<PhonemeId> canon;
  for (auto& t : tags) {
    AnnotationEvent ev = ParseAnnotationTag(t, alphabet);
    ev.index = static_cast<int>(canon.size());
    if (ev.kind != EventKind::kAddition) canon.push_back(*ev.cpl);
    events.push_back(ev);
  }
  if (canonical) *canonical = std::move(canon);
  return events;
}

std::vector<PhonemeId> ActualSequence(const std::vector<PhonemeId>& canonical,
                                      const std::vector<AnnotationEvent>& events) {
  const int n = static_cast<int>(canonical.size());
  std::vector<std::vector<PhonemeId>> inserted(static_cast<std::size_t>(n) + 1);
  std::vector<const AnnotationEvent*> at(static_cast<std::size_t>(n), nullptr);
  for (auto& ev : events) {
    if (ev.kind == EventKind::kAddition) {
      if (ev.index < 0 || ev.index > n) throw ValidationError("annotation event index out of range");
      inserted[static_cast<std::size_t>(ev.index)].push_back(*ev.ppl);
      continue;
    }
    if (ev.index < 0 || ev.index >= n) throw ValidationError("annotation event index out of range");
    auto& slot = at[static_cast<std::size_t>(ev.index)];
    if (slot && !(*slot == ev)) {
      throw ValidationError("conflicting annotation events at index " + std::to_string(ev.index));
    }
    if (ev.cpl && *ev.cpl != canonical[static_cast<std::size_t>(ev.index)]) {
      throw ValidationError("annotation event at index " + std::to_string(ev.index) +
                            " does not match the canonical phoneme");
    }
    slot = &ev;
  }
  std::vector<PhonemeId> out;
  for (int i = 0; i <= n; ++i) {
    for (auto p : inserted[static_cast<std::size_t>(i)]) out.push_back(p);
    if (i == n) break;
    const AnnotationEvent* ev = at[static_cast<std::size_t>(i)];
    if (!ev || ev->kind == EventKind::kCorrect) {
      out.push_back(canonical[static_cast<std::size_t>(i)]);
    } else if (ev->kind == EventKind::kSubstitution) {
      out.push_back(*ev->ppl);
    }
  }
  return out;
}

std::vector<PhonemeId> Utterance::Target() const {
  if (annotation) return ActualSequence(canonical, *annotation);
  return canonical;
}

const char* SplitName(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation" || name == "dev") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw ValidationError("unknown split '" + name + "'");
}

void CorpusManifest::Validate() const {
  if (splits.size() != utterances.size()) throw ValidationError("manifest: split tags not parallel to utterances");
  std::set<std::string> seen;
  for (auto& u : utterances) {
    if (!seen.insert(u.utterance_id).second) {
      throw ValidationError("manifest: duplicate utterance id '" + u.utterance_id + "'");
    }
    if (u.utterance_id.rfind(u.speaker_id + "_", 0) != 0) {
      throw ValidationError("utterance id '" + u.utterance_id + "' does not begin with speaker id '" +
                            u.speaker_id + "_'");
    }
    if (u.segment && !(u.segment->start_s >= 0.0 && u.segment->start_s < u.segment->end_s)) {
      throw ValidationError("utterance '" + u.utterance_id + "': invalid segment bounds");
    }
  }
}

CorpusManifest CorpusManifest::Subset(Split s) const {
  CorpusManifest out;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    if (splits[i] == s) {
      out.utterances.push_back(utterances[i]);
      out.splits.push_back(s);
    }
  }
  return out;
}

const Utterance* CorpusManifest::Find(const std::string& utterance_id) const {
  for (auto& u : utterances) {
    if (u.utterance_id == utterance_id) return &u;
  }
  return nullptr;
}

namespace {

struct KeyedFile {
  std::map<std::string, std::string> rows;
  std::vector<std::string> order;
};

KeyedFile ReadKeyedFile(const fs::path& path, std::vector<std::string>* problems) {
  KeyedFile kf;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = Trim(line);
    if (t.empty()) continue;
    auto sp = t.find_first_of(" \t");
    if (sp == std::string::npos) {
      problems->push_back(path.filename().string() + ":" + std::to_string(line_no) +
                          ": malformed line (fewer than 2 fields)");
      continue;
    }
    std::string key = t.substr(0, sp);
    std::string rest = Trim(t.substr(sp));
    if (!kf.rows.emplace(key, rest).second) {
      problems->push_back(path.filename().string() + ":" + std::to_string(line_no) + ": duplicate id '" +
                          key + "'");
      continue;
    }
    kf.order.push_back(key);
  }
  return kf;
}

double ParseSeconds(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError(where + ": bad time value '" + s + "'");
  }
  return v;
}

void WriteLines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write " + path.string());
  for (auto& l : lines) out << l << '\n';
  if (!out) throw RuntimeError("write failed: " + path.string());
}

}  // namespace

CorpusManifest ParseKaldiDir(const std::string& dir_str, const PhonemeAlphabet& alphabet) {
  fs::path dir(dir_str);
  std::vector<std::string> missing;
  for (const char* req : {"text", "wav.scp", "utt2spk"}) {
    if (!fs::is_regular_file(dir / req)) missing.emplace_back(req);
  }
  if (!missing.empty()) {
    throw ValidationError("kaldi dir " + dir_str + " is missing required files: " + Join(missing, ", "));
  }

  std::vector<std::string> problems;
  KeyedFile text = ReadKeyedFile(dir / "text", &problems);
  KeyedFile wav = ReadKeyedFile(dir / "wav.scp", &problems);
  KeyedFile utt2spk = ReadKeyedFile(dir / "utt2spk", &problems);
  std::optional<KeyedFile> segments, phn, annot, spk2utt;
  if (fs::is_regular_file(dir / "segments")) segments = ReadKeyedFile(dir / "segments", &problems);
  if (fs::is_regular_file(dir / "phn_text")) phn = ReadKeyedFile(dir / "phn_text", &problems);
  if (fs::is_regular_file(dir / "annotation")) annot = ReadKeyedFile(dir / "annotation", &problems);
  if (fs::is_regular_file(dir / "spk2utt")) spk2utt = ReadKeyedFile(dir / "spk2utt", &problems);

  CorpusManifest m;
  std::set<std::string> used_wav_keys;
  for (auto& id : text.order) {
    Utterance u;
    u.utterance_id = id;
    u.words = SplitWhitespace(text.rows[id]);

    auto spk = utt2spk.rows.find(id);
    if (spk == utt2spk.rows.end()) {
      problems.push_back("utt2spk: missing id '" + id + "'");
    } else {
      u.speaker_id = spk->second;
    }

    std::string wav_key = id;
    if (segments) {
      auto seg = segments->rows.find(id);
      if (seg != segments->rows.end()) {
        auto f = SplitWhitespace(seg->second);
        if (f.size() != 3) {
          problems.push_back("segments: malformed line for '" + id + "'");
        } else {
          u.segment = Segment{f[0], ParseSeconds(f[1], "segments"), ParseSeconds(f[2], "segments")};
          wav_key = f[0];
        }
      }
    }
    auto w = wav.rows.find(wav_key);
    if (w == wav.rows.end()) {
      problems.push_back("wav.scp: missing id '" + wav_key + "'");
    } else {
      u.wav_path = w->second;
      used_wav_keys.insert(wav_key);
    }

    try {
      if (phn) {
        auto p = phn->rows.find(id);
        if (p == phn->rows.end()) {
          problems.push_back("phn_text: missing id '" + id + "'");
        } else {
          u.canonical = alphabet.Encode(SplitWhitespace(p->second));
        }
      }
      if (annot) {
        auto a = annot->rows.find(id);
        if (a != annot->rows.end()) {
          std::vector<PhonemeId> canon;
          u.annotation = EventsFromTags(SplitWhitespace(a->second), alphabet, &canon);
          if (phn && u.canonical != canon) {
            problems.push_back("annotation: canonical phones for '" + id + "' disagree with phn_text");
          }
          u.canonical = canon;
          ActualSequence(u.canonical, *u.annotation);
        }
      }
    } catch (const ValidationError& e) {
      problems.push_back(id + ": " + e.what());
    }
    m.utterances.push_back(std::move(u));
    m.splits.push_back(Split::kTrain);
  }

  for (auto& k : utt2spk.order) {
    if (!text.rows.count(k)) problems.push_back("utt2spk: id '" + k + "' absent from text");
  }
  for (auto& k : wav.order) {
    if (!used_wav_keys.count(k)) problems.push_back("wav.scp: id '" + k + "' absent from text");
  }
  if (spk2utt) {
    for (auto& [spk, rest] : spk2utt->rows) {
      for (auto& utt : SplitWhitespace(rest)) {
        auto it = utt2spk.rows.find(utt);
        if (it == utt2spk.rows.end() || it->second != spk) {
          problems.push_back("spk2utt: '" + spk + " " + utt + "' disagrees with utt2spk");
        }
      }
    }
  }
  if (!problems.empty()) throw ValidationError("kaldi dir " + dir_str + ":\n  " + Join(problems, "\n  "));
  m.Validate();
  return m;
}

void EmitKaldiDir(const CorpusManifest& manifest, const std::string& dir_str, const PhonemeAlphabet& alphabet) {
  manifest.Validate();
  fs::path dir(dir_str);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeError("cannot create " + dir_str + ": " + ec.message());

  std::vector<const Utterance*> sorted;
  for (auto& u : manifest.utterances) sorted.push_back(&u);
  std::sort(sorted.begin(), sorted.end(),
            [](const Utterance* a, const Utterance* b) { return a->utterance_id < b->utterance_id; });

  std::vector<std::string> text, utt2spk, phn, segments, annotation;
  std::map<std::string, std::string> wav;
  std::map<std::string, std::vector<std::string>> spk2utt;
  bool any_segment = false, any_annotation = false;
  for (auto* u : sorted) {
    text.push_back(u->utterance_id + (u->words.empty() ? "" : " " + Join(u->words, " ")));
    utt2spk.push_back(u->utterance_id + " " + u->speaker_id);
    spk2utt[u->speaker_id].push_back(u->utterance_id);
    phn.push_back(u->utterance_id + (u->canonical.empty() ? "" : " " + Join(alphabet.Decode(u->canonical), " ")));
    if (u->segment) {
      any_segment = true;
      segments.push_back(u->utterance_id + " " + u->segment->recording_id + " " +
                         FormatSeconds(u->segment->start_s) + " " + FormatSeconds(u->segment->end_s));
      wav[u->segment->recording_id] = u->wav_path;
    } else {
      wav[u->utterance_id] = u->wav_path;
    }
    if (u->annotation) {
      any_annotation = true;
      std::vector<std::string> tags;
      for (auto& ev : *u->annotation) tags.push_back(FormatAnnotationTag(ev, alphabet));
      annotation.push_back(u->utterance_id + (tags.empty() ? "" : " " + Join(tags, " ")));
    }
  }
  std::vector<std::string> wav_lines, spk_lines;
  for (auto& [k, v] : wav) wav_lines.push_back(k + " " + v);
  for (auto& [s, utts] : spk2utt) spk_lines.push_back(s + " " + Join(utts, " "));

  WriteLines(dir / "text", text);
  WriteLines(dir / "wav.scp", wav_lines);
  WriteLines(dir / "utt2spk", utt2spk);
  WriteLines(dir / "spk2utt", spk_lines);
  WriteLines(dir / "phn_text", phn);
  if (any_segment) WriteLines(dir / "segments", segments);
  if (any_annotation) WriteLines(dir / "annotation", annotation);
}

Split DefaultSplitFor(const std::string& speaker_id) {
  static const std::set<std::string> kValidation = {"MBMPS", "YBAA", "NCC", "SVBI", "YDCK", "THV"};
  static const std::set<std::string> kTest = {"NJS", "ZHAA", "TXHC", "TNI", "YKWK", "TLV"};
  std::string s = ToUpper(speaker_id);
  if (kValidation.count(s)) return Split::kValidation;
  if (kTest.count(s)) return Split::kTest;
  return Split::kTrain;
}

CorpusManifest DefaultSplit(CorpusManifest manifest) {
  manifest.splits.resize(manifest.utterances.size());
  for (std::size_t i = 0; i < manifest.utterances.size(); ++i) {
    manifest.splits[i] = DefaultSplitFor(manifest.utterances[i].speaker_id);
  }
  return manifest;
}

std::string FormatSeconds(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

}  // namespace mdd
