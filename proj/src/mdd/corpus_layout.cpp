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

#include "mdd/corpus_layout.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mdd/textgrid.hpp"

namespace fs = std::filesystem;

namespace mdd {

namespace {

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> SortedChildren(const fs::path& dir) {
  std::vector<fs::path> out;
  for (auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

bool HasExtension(const fs::path& p, const std::string& ext_upper) {
  return ToUpper(p.extension().string()) == ext_upper;
}

// Keeps error-template tags; drops empty and bare silence-class labels.
std::vector<std::string> SpeechLabels(const std::vector<std::string>& labels, const PhonemeAlphabet& alphabet) {
  std::vector<std::string> out;
  for (auto& l : labels) {
    if (l.find(',') == std::string::npos) {
      std::string n = NormalizeLabel(l);
      if (n == "SIL" || n == "SP" || n == "SPN") continue;
      auto id = alphabet.Find(n);
      if (id && alphabet.Classify(*id) == PhoneClass::kSilence) continue;
    }
    out.push_back(l);
  }
  return out;
}

std::vector<std::string> TranscriptWords(const std::string& text) {
  std::vector<std::string> words;
  for (auto& w : SplitWhitespace(text)) {
    std::string clean;
    for (char c : w) {
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-') {
        clean += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    if (!clean.empty()) words.push_back(clean);
  }
  return words;
}

CorpusManifest IngestL2Arctic(const fs::path& root, const PhonemeAlphabet& alphabet) {
  CorpusManifest m;
  std::vector<std::string> problems;
  for (auto& spk_dir : SortedChildren(root)) {
    if (!fs::is_directory(spk_dir / "wav") && !fs::is_directory(spk_dir / "transcript")) continue;
    std::string spk = ToUpper(spk_dir.filename().string());
    std::set<std::string> stems;
    for (const char* sub : {"wav", "transcript"}) {
      if (!fs::is_directory(spk_dir / sub)) continue;
      for (auto& f : SortedChildren(spk_dir / sub)) {
        if (HasExtension(f, ".WAV") || HasExtension(f, ".TXT")) stems.insert(f.stem().string());
      }
    }
    for (auto& stem : stems) {
      Utterance u;
      u.speaker_id = spk;
      u.utterance_id = spk + "_" + stem;
      u.wav_path = (spk_dir / "wav" / (stem + ".wav")).string();
      try {
        fs::path tr = spk_dir / "transcript" / (stem + ".txt");
        if (fs::is_regular_file(tr)) u.words = TranscriptWords(ReadAll(tr));
        fs::path ann = spk_dir / "annotation" / (stem + ".TextGrid");
        fs::path ali = spk_dir / "textgrid" / (stem + ".TextGrid");
        if (fs::is_regular_file(ann)) {
          auto tags = SpeechLabels(TextGrid::Load(ann.string()).Labels("phones"), alphabet);
          u.annotation = EventsFromTags(tags, alphabet, &u.canonical);
          ActualSequence(u.canonical, *u.annotation);
        } else if (fs::is_regular_file(ali)) {
          auto labels = SpeechLabels(TextGrid::Load(ali.string()).Labels("phones"), alphabet);
          u.canonical = alphabet.Encode(labels);
        }
      } catch (const ValidationError& e) {
        problems.push_back(u.utterance_id + ": " + e.what());
      }
      m.utterances.push_back(std::move(u));
      m.splits.push_back(Split::kTrain);
    }
  }
  if (!problems.empty()) throw ValidationError(Join(problems, "\n"));
  return m;
}

void CollectTimit(const fs::path& dir, std::vector<fs::path>* phn_files) {
  for (auto& p : SortedChildren(dir)) {
    if (fs::is_directory(p)) CollectTimit(p, phn_files);
    else if (HasExtension(p, ".PHN")) phn_files->push_back(p);
  }
}

CorpusManifest IngestTimit(const fs::path& root, const PhonemeAlphabet& alphabet) {
  std::vector<fs::path> phns;
  CollectTimit(root, &phns);
  CorpusManifest m;
  std::vector<std::string> problems;
  for (auto& phn : phns) {
    std::string spk = ToUpper(phn.parent_path().filename().string());
    std::string sent = ToUpper(phn.stem().string());
    Utterance u;
    u.speaker_id = spk;
    u.utterance_id = spk + "_" + sent;
    fs::path wav = phn;
    wav.replace_extension(phn.extension().string() == ".PHN" ? ".WAV" : ".wav");
    u.wav_path = wav.string();
    try {
      std::vector<std::string> labels;
      std::istringstream is(ReadAll(phn));
      std::string line;
      while (std::getline(is, line)) {
        auto f = SplitWhitespace(line);
        if (f.size() < 3) continue;
        std::string folded = FoldTimitPhone(f[2]);
        if (!folded.empty()) labels.push_back(folded);
      }
      u.canonical = alphabet.Encode(SpeechLabels(labels, alphabet));
      for (const char* ext : {".WRD", ".wrd"}) {
        fs::path wrd = phn;
        wrd.replace_extension(ext);
        if (!fs::is_regular_file(wrd)) continue;
        std::istringstream ws(ReadAll(wrd));
        while (std::getline(ws, line)) {
          auto f = SplitWhitespace(line);
          if (f.size() >= 3) u.words.push_back(f[2]);
        }
        break;
      }
    } catch (const ValidationError& e) {
      problems.push_back(u.utterance_id + ": " + e.what());
    }
    m.utterances.push_back(std::move(u));
    m.splits.push_back(Split::kTrain);
  }
  if (!problems.empty()) throw ValidationError(Join(problems, "\n"));
  return m;
}

}  // namespace

std::string FoldTimitPhone(const std::string& label) {
  static const std::map<std::string, std::string> kFold = {
      {"AX", "AH"},   {"AX-H", "AH"}, {"AXR", "ER"},  {"DX", "D"},    {"EL", "L"},    {"EM", "M"},
      {"EN", "N"},    {"ENG", "NG"},  {"HV", "HH"},   {"IX", "IH"},   {"NX", "N"},    {"UX", "UW"},
      {"BCL", "SIL"}, {"DCL", "SIL"}, {"GCL", "SIL"}, {"KCL", "SIL"}, {"PCL", "SIL"}, {"TCL", "SIL"},
      {"H#", "SIL"},  {"PAU", "SIL"}, {"EPI", "SIL"}, {"Q", ""}};
  std::string u = ToUpper(label);
  auto it = kFold.find(u);
  return it == kFold.end() ? u : it->second;
}

CorpusLayout DetectLayout(const std::string& root_str) {
  fs::path root(root_str);
  if (!fs::is_directory(root)) throw ValidationError("corpus root is not a directory: " + root_str);
  if (fs::is_regular_file(root / "wav.scp")) return CorpusLayout::kKaldi;
  for (auto& p : SortedChildren(root)) {
    if (fs::is_directory(p / "wav") || fs::is_directory(p / "transcript")) return CorpusLayout::kL2Arctic;
  }
  std::vector<fs::path> phns;
  CollectTimit(root, &phns);
  if (!phns.empty()) return CorpusLayout::kTimit;
  throw ValidationError("unrecognized corpus layout under " + root_str);
}

CorpusManifest IngestCorpus(const std::string& root, const PhonemeAlphabet& alphabet) {
  CorpusManifest m;
  switch (DetectLayout(root)) {
    case CorpusLayout::kKaldi: m = ParseKaldiDir(root, alphabet); break;
    case CorpusLayout::kL2Arctic: m = IngestL2Arctic(root, alphabet); break;
    case CorpusLayout::kTimit: m = IngestTimit(root, alphabet); break;
  }
  m.Validate();
  return m;
}

CorpusManifest MergeManifests(const std::vector<CorpusManifest>& parts) {
  CorpusManifest out;
  for (auto& p : parts) {
    out.utterances.insert(out.utterances.end(), p.utterances.begin(), p.utterances.end());
    out.splits.insert(out.splits.end(), p.splits.begin(), p.splits.end());
  }
  out.Validate();
  return out;
}

}  // namespace mdd
