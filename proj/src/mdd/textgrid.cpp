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

#include "mdd/textgrid.hpp"

#include <fstream>
#include <sstream>

#include "mdd/common.hpp"
#include "mdd/corpus.hpp"

namespace mdd {

namespace {

// Praat escapes a quote inside a string by doubling it.
std::string Unquote(const std::string& v, int line_no) {
  std::string s = Trim(v);
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') {
    throw ValidationError("TextGrid line " + std::to_string(line_no) + ": expected quoted string");
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    out += s[i];
    if (s[i] == '"' && i + 2 < s.size() && s[i + 1] == '"') ++i;
  }
  return out;
}

std::string Quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  return out + "\"";
}

double ParseNumber(const std::string& v, int line_no) {
  try {
    std::size_t used = 0;
    double d = std::stod(Trim(v), &used);
    return d;
  } catch (const std::exception&) {
    throw ValidationError("TextGrid line " + std::to_string(line_no) + ": bad number '" + v + "'");
  }
}

// Praat writes UTF-16 with a BOM on some platforms; labels are ASCII.
std::string DecodeBytes(const std::string& raw) {
  if (raw.size() >= 2 && static_cast<unsigned char>(raw[0]) == 0xFF &&
      static_cast<unsigned char>(raw[1]) == 0xFE) {
    std::string out;
    for (std::size_t i = 2; i + 1 < raw.size(); i += 2) out += raw[i];
    return out;
  }
  if (raw.size() >= 2 && static_cast<unsigned char>(raw[0]) == 0xFE &&
      static_cast<unsigned char>(raw[1]) == 0xFF) {
    std::string out;
    for (std::size_t i = 3; i < raw.size(); i += 2) out += raw[i];
    return out;
  }
  if (raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) return raw.substr(3);
  return raw;
}

}  // namespace

const TextGridTier* TextGrid::Tier(const std::string& name) const {
  for (auto& t : tiers) {
    if (ToUpper(t.name) == ToUpper(name)) return &t;
  }
  return nullptr;
}

std::vector<std::string> TextGrid::Labels(const std::string& tier_name) const {
  const TextGridTier* t = Tier(tier_name);
  if (!t) throw ValidationError("TextGrid has no tier named '" + tier_name + "'");
  std::vector<std::string> out;
  for (auto& iv : t->intervals) {
    std::string s = Trim(iv.text);
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

TextGrid TextGrid::Parse(const std::string& raw) {
  std::istringstream is(DecodeBytes(raw));
  TextGrid tg;
  std::string line;
  int line_no = 0;
  bool header_ok = false;
  bool in_items = false;
  bool tier_is_interval = false;
  TextGridTier* tier = nullptr;
  TextGridInterval* iv = nullptr;
  std::vector<TextGridTier> all;
  std::vector<bool> keep;

  while (std::getline(is, line)) {
    ++line_no;
    std::string t = Trim(line);
    if (t.empty()) continue;
    if (!header_ok) {
      if (t.find("ooTextFile") != std::string::npos) header_ok = true;
      else throw ValidationError("not a long-format TextGrid (missing ooTextFile header)");
      continue;
    }
    if (t.rfind("item []", 0) == 0) {
      in_items = true;
      continue;
    }
    if (t.rfind("item [", 0) == 0) {
      all.emplace_back();
      keep.push_back(false);
      tier = &all.back();
      iv = nullptr;
      tier_is_interval = false;
      continue;
    }
    if (t.rfind("intervals [", 0) == 0) {
      if (!tier) throw ValidationError("TextGrid line " + std::to_string(line_no) + ": interval outside tier");
      tier->intervals.emplace_back();
      iv = &tier->intervals.back();
      continue;
    }
    if (t.rfind("points [", 0) == 0) {
      iv = nullptr;
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    std::string key = Trim(t.substr(0, eq));
    std::string val = Trim(t.substr(eq + 1));
    if (!in_items) {
      if (key == "xmin") tg.xmin = ParseNumber(val, line_no);
      else if (key == "xmax") tg.xmax = ParseNumber(val, line_no);
      continue;
    }
    if (!tier) continue;
    if (key == "class") {
      tier_is_interval = Unquote(val, line_no) == "IntervalTier";
      keep.back() = tier_is_interval;
    } else if (key == "name") {
      tier->name = Unquote(val, line_no);
    } else if (iv && tier_is_interval) {
      if (key == "xmin") iv->xmin = ParseNumber(val, line_no);
      else if (key == "xmax") iv->xmax = ParseNumber(val, line_no);
      else if (key == "text") iv->text = Unquote(val, line_no);
    }
  }
  if (!header_ok) throw ValidationError("empty TextGrid");
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (keep[i]) tg.tiers.push_back(std::move(all[i]));
  }
  return tg;
}

TextGrid TextGrid::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open TextGrid " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Parse(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string TextGrid::Serialize() const {
  std::ostringstream os;
  os << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
  os << "xmin = " << FormatSeconds(xmin) << "\nxmax = " << FormatSeconds(xmax) << "\n";
  os << "tiers? <exists>\nsize = " << tiers.size() << "\nitem []:\n";
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    auto& t = tiers[i];
    os << "    item [" << i + 1 << "]:\n";
    os << "        class = \"IntervalTier\"\n";
    os << "        name = " << Quote(t.name) << "\n";
    os << "        xmin = " << FormatSeconds(xmin) << "\n        xmax = " << FormatSeconds(xmax) << "\n";
    os << "        intervals: size = " << t.intervals.size() << "\n";
    for (std::size_t k = 0; k < t.intervals.size(); ++k) {
      auto& iv = t.intervals[k];
      os << "        intervals [" << k + 1 << "]:\n";
      os << "            xmin = " << FormatSeconds(iv.xmin) << "\n";
      os << "            xmax = " << FormatSeconds(iv.xmax) << "\n";
      os << "            text = " << Quote(iv.text) << "\n";
    }
  }
  return os.str();
}

}  // namespace mdd
