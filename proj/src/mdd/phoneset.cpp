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

#include "mdd/phoneset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace mdd {

const char* PhoneClassName(PhoneClass c) {
  switch (c) {
    case PhoneClass::kVowel: return "vowel";
    case PhoneClass::kConsonant: return "consonant";
    case PhoneClass::kSilence: return "silence";
  }
  return "?";
}

namespace {

PhoneClass ParseClass(const std::string& tok, int line_no) {
  std::string t = ToUpper(tok);
  if (t == "VOWEL") return PhoneClass::kVowel;
  if (t == "CONSONANT") return PhoneClass::kConsonant;
  if (t == "SILENCE") return PhoneClass::kSilence;
  throw ValidationError("alphabet line " + std::to_string(line_no) + ": unknown class '" + tok + "'");
}

}  // namespace

std::string NormalizeLabel(const std::string& label) {
  std::string s = ToUpper(Trim(label));
  if (s.size() > 1 && std::isdigit(static_cast<unsigned char>(s.back())) &&
      std::isalpha(static_cast<unsigned char>(s[s.size() - 2]))) {
    s.pop_back();
  }
  return s;
}

PhonemeAlphabet::PhonemeAlphabet(std::vector<std::string> symbols, std::vector<PhoneClass> classes)
    : symbols_(std::move(symbols)), classes_(std::move(classes)) {
  if (symbols_.size() != classes_.size()) throw ValidationError("alphabet: symbol/class count mismatch");
  if (symbols_.empty()) throw ValidationError("alphabet: empty inventory");
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    auto& s = symbols_[i];
    s = NormalizeLabel(s);
    if (s.empty()) throw ValidationError("alphabet: empty symbol");
    if (s == ToUpper(kBlankLabel)) throw ValidationError("alphabet: symbol collides with blank label");
    if (!index_.emplace(s, static_cast<PhonemeId>(i)).second) {
      throw ValidationError("alphabet: duplicate symbol '" + s + "'");
    }
  }
}

PhonemeAlphabet PhonemeAlphabet::Default() {
  static const char* kVowels[] = {"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                                  "EY", "IH", "IY", "OW", "OY", "UH", "UW"};
  static const char* kConsonants[] = {"B",  "CH", "D", "DH", "F",  "G",  "HH", "JH",
                                      "K",  "L",  "M", "N",  "NG", "P",  "R",  "S",
                                      "SH", "T",  "TH", "V", "W",  "Y",  "Z",  "ZH"};
  std::vector<std::string> syms;
  std::vector<PhoneClass> cls;
  // Alphabetical order over the 39 phonemes, as in the CMU dictionary.
  std::vector<std::pair<std::string, PhoneClass>> all;
  for (auto* v : kVowels) all.emplace_back(v, PhoneClass::kVowel);
  for (auto* c : kConsonants) all.emplace_back(c, PhoneClass::kConsonant);
  std::sort(all.begin(), all.end());
  for (auto& [s, c] : all) {
    syms.push_back(s);
    cls.push_back(c);
  }
  for (auto* s : {"SIL", "SP", "ERR"}) {
    syms.emplace_back(s);
    cls.push_back(PhoneClass::kSilence);
  }
  return PhonemeAlphabet(std::move(syms), std::move(cls));
}

PhonemeAlphabet PhonemeAlphabet::Parse(const std::string& text) {
  std::vector<std::string> syms;
  std::vector<PhoneClass> cls;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto toks = SplitWhitespace(line);
    if (toks.empty()) continue;
    if (toks.size() != 2) {
      throw ValidationError("alphabet line " + std::to_string(line_no) + ": expected 'SYMBOL CLASS'");
    }
    syms.push_back(toks[0]);
    cls.push_back(ParseClass(toks[1], line_no));
  }
  if (syms.empty()) throw ValidationError("alphabet: empty file");
  return PhonemeAlphabet(std::move(syms), std::move(cls));
}

PhonemeAlphabet PhonemeAlphabet::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open alphabet file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::string PhonemeAlphabet::Serialize() const {
  std::string out;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    out += symbols_[i];
    out += ' ';
    out += PhoneClassName(classes_[i]);
    out += '\n';
  }
  return out;
}

void PhonemeAlphabet::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write alphabet file: " + path);
  out << Serialize();
}

const std::string& PhonemeAlphabet::symbol(PhonemeId id) const {
  if (id < 0 || id >= size()) throw ValidationError("phoneme id out of range: " + std::to_string(id));
  return symbols_[static_cast<std::size_t>(id)];
}

PhoneClass PhonemeAlphabet::Classify(PhonemeId id) const {
  if (id < 0 || id >= size()) throw ValidationError("phoneme id out of range: " + std::to_string(id));
  return classes_[static_cast<std::size_t>(id)];
}

std::optional<PhonemeId> PhonemeAlphabet::Find(const std::string& label) const {
  auto it = index_.find(NormalizeLabel(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PhonemeId PhonemeAlphabet::Lookup(const std::string& label) const {
  auto id = Find(label);
  if (!id) throw ValidationError("unknown phoneme label '" + label + "'");
  return *id;
}

std::vector<PhonemeId> PhonemeAlphabet::MembersOf(PhoneClass c) const {
  std::vector<PhonemeId> out;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i] == c) out.push_back(static_cast<PhonemeId>(i));
  }
  return out;
}

std::vector<PhonemeId> PhonemeAlphabet::Encode(const std::vector<std::string>& labels) const {
  std::vector<PhonemeId> out;
  out.reserve(labels.size());
  for (auto& l : labels) out.push_back(Lookup(l));
  return out;
}

std::vector<std::string> PhonemeAlphabet::Decode(const std::vector<PhonemeId>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(symbol(id));
  return out;
}

void CheckSequence(const PhonemeAlphabet& alphabet, const std::vector<PhonemeId>& ids) {
  for (auto id : ids) {
    if (id < 0 || id >= alphabet.size()) {
      throw ValidationError("invalid phoneme id " + std::to_string(id) + " in sequence");
    }
  }
}

}  // namespace mdd
