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

#include "mdd/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mdd/augment.hpp"
#include "mdd/textgrid.hpp"

namespace fs = std::filesystem;

namespace mdd {

namespace {

struct Voice {
  const char* symbol;
  PhoneClass cls;
  double voicing;  // pulse-train gain
  double noise;    // white-noise gain
  double formants[3];
  double bandwidths[3];
};

// Formant values loosely follow adult male averages; consonants are
// exaggerated so each class has a distinct spectral signature.
constexpr Voice kVoices[] = {
    {"AA", PhoneClass::kVowel, 1.0, 0.02, {730, 1090, 2440}, {90, 110, 160}},
    {"AO", PhoneClass::kVowel, 1.0, 0.02, {570, 840, 2410}, {80, 100, 160}},
    {"OW", PhoneClass::kVowel, 1.0, 0.02, {360, 640, 2300}, {70, 90, 150}},
    {"IY", PhoneClass::kVowel, 1.0, 0.02, {270, 2290, 3010}, {60, 120, 180}},
    {"IH", PhoneClass::kVowel, 1.0, 0.02, {430, 1850, 2550}, {70, 110, 170}},
    {"S", PhoneClass::kConsonant, 0.0, 1.0, {5200, 6500, 7400}, {900, 900, 900}},
    {"Z", PhoneClass::kConsonant, 0.5, 0.6, {250, 4400, 5600}, {80, 700, 700}},
    {"D", PhoneClass::kConsonant, 0.6, 0.25, {300, 1700, 3300}, {100, 300, 300}},
    {"DH", PhoneClass::kConsonant, 0.7, 0.35, {320, 1300, 2600}, {100, 250, 300}},
    {"M", PhoneClass::kConsonant, 0.8, 0.0, {250, 1100, 2200}, {60, 200, 300}},
};

constexpr int kToySize = static_cast<int>(std::size(kVoices));

class Resonator {
 public:
  Resonator(double f, double bw, int fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    a1_ = 2.0 * r * std::cos(2.0 * std::numbers::pi * f / fs);
    a2_ = -r * r;
    gain_ = 1.0 - r;
  }
  double operator()(double x) {
    const double y = gain_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_, a2_, gain_, y1_ = 0.0, y2_ = 0.0;
};

void Render(const Voice& v, int n, int fs, std::mt19937_64& rng, std::vector<double>& out) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> f0_draw(110.0, 130.0);
  const double f0 = f0_draw(rng);
  Resonator r0(v.formants[0], v.bandwidths[0], fs), r1(v.formants[1], v.bandwidths[1], fs),
      r2(v.formants[2], v.bandwidths[2], fs);
  std::vector<double> seg(static_cast<std::size_t>(n));
  double phase = 0.0;
  for (int i = 0; i < n; ++i) {
    phase += f0 / fs;
    double src = 0.0;
    if (phase >= 1.0) {
      phase -= 1.0;
      src += v.voicing * 8.0;
    }
    src += v.noise * noise(rng);
    seg[static_cast<std::size_t>(i)] = r0(src) + 0.7 * r1(src) + 0.5 * r2(src);
  }
  double peak = 1e-12;
  for (double s : seg) peak = std::max(peak, std::abs(s));
  // Short raised-cosine ramps avoid clicks at segment edges.
  const int ramp = std::min(n / 4, fs / 200);
  for (int i = 0; i < n; ++i) {
    double g = 0.3 / peak;
    if (i < ramp) g *= 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
    if (n - 1 - i < ramp) g *= 0.5 - 0.5 * std::cos(std::numbers::pi * (n - 1 - i) / ramp);
    out.push_back(g * seg[static_cast<std::size_t>(i)]);
  }
}

void AppendQuiet(int n, std::mt19937_64& rng, std::vector<double>& out) {
  std::normal_distribution<double> noise(0.0, 1e-3);
  for (int i = 0; i < n; ++i) out.push_back(noise(rng));
}

std::vector<PhonemeId> RandomSentence(int min_len, int max_len, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len_draw(min_len, max_len);
  std::uniform_int_distribution<PhonemeId> ph(0, kToySize - 1);
  const int len = len_draw(rng);
  std::vector<PhonemeId> s;
  while (static_cast<int>(s.size()) < len) {
    const PhonemeId p = ph(rng);
    if (!s.empty() && s.back() == p) continue;
    s.push_back(p);
  }
  return s;
}

void WriteText(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError("cannot write " + p.string());
  f << text;
}

std::string Lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

PhonemeAlphabet ToyAlphabet() {
  std::vector<std::string> symbols;
  std::vector<PhoneClass> classes;
  for (const auto& v : kVoices) {
    symbols.emplace_back(v.symbol);
    classes.push_back(v.cls);
  }
  return PhonemeAlphabet(std::move(symbols), std::move(classes));
}

Waveform SynthesizeUtterance(const std::vector<PhonemeId>& phones, int sample_rate_hz, std::mt19937_64& rng,
                             std::vector<std::pair<double, double>>* bounds) {
  const int fs = sample_rate_hz;
  std::uniform_int_distribution<int> dur_ms(70, 110);
  std::vector<double> samples;
  AppendQuiet(fs / 20, rng, samples);
  if (bounds) bounds->clear();
  for (std::size_t k = 0; k < phones.size(); ++k) {
    const PhonemeId p = phones[k];
    if (p < 0 || p >= kToySize) throw ValidationError("synth: phoneme id out of range");
    const double start = static_cast<double>(samples.size()) / fs;
    Render(kVoices[p], dur_ms(rng) * fs / 1000, fs, rng, samples);
    if (bounds) bounds->emplace_back(start, static_cast<double>(samples.size()) / fs);
    AppendQuiet(fs / 50, rng, samples);
  }
  AppendQuiet(fs / 20, rng, samples);
  Waveform w;
  w.sample_rate_hz = fs;
  w.samples = std::move(samples);
  return w;
}

SynthSummary WriteToyCorpus(const std::string& root_str, const SynthOptions& opts) {
  if (opts.min_phonemes < 1 || opts.max_phonemes < opts.min_phonemes) {
    throw ValidationError("synth: bad sentence length range");
  }
  const fs::path root(root_str);
  fs::create_directories(root);
  const PhonemeAlphabet alphabet = ToyAlphabet();
  alphabet.Save((root / "phones.txt").string());
  ConfusionTable table = ConfusionTable::Default(alphabet);

  SynthSummary summary;
  struct SpeakerPlan {
    const char* name;
    int count;
    bool annotate;
  };
  const SpeakerPlan plan[] = {{"TOY1", opts.train_utterances, false},
                              {"MBMPS", opts.validation_utterances, false},
                              {"NJS", opts.test_utterances, true}};
  std::mt19937_64 rng(opts.seed);
  for (const auto& spk : plan) {
    for (int u = 0; u < spk.count; ++u) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "toy_%04d", u + 1);
      const fs::path dir = root / spk.name;
      const std::vector<PhonemeId> canonical = RandomSentence(opts.min_phonemes, opts.max_phonemes, rng);
      std::vector<PhonemeId> actual = canonical;
      if (spk.annotate) {
        std::bernoulli_distribution flip(opts.mispronunciation_rate);
        for (auto& p : actual) {
          auto it = table.entries.find(p);
          if (it == table.entries.end() || !flip(rng)) continue;
          std::vector<PhonemeId> subs;
          for (PhonemeId d : it->second) {
            if (d != ConfusionTable::kDeleteTarget) subs.push_back(d);
          }
          if (subs.empty()) continue;
          std::uniform_int_distribution<std::size_t> pick(0, subs.size() - 1);
          p = subs[pick(rng)];
          ++summary.mispronounced_positions;
        }
        summary.total_test_positions += static_cast<int>(actual.size());
      }
      std::vector<std::pair<double, double>> bounds;
      const Waveform w = SynthesizeUtterance(actual, opts.sample_rate_hz, rng, &bounds);
      fs::create_directories(dir / "wav");
      SaveWav((dir / "wav" / (std::string(stem) + ".wav")).string(), w);

      std::vector<std::string> words;
      for (PhonemeId p : canonical) words.push_back(Lower(alphabet.symbol(p)));
      WriteText(dir / "transcript" / (std::string(stem) + ".txt"), Join(words, " ") + "\n");

      TextGrid tg;
      tg.xmin = 0.0;
      tg.xmax = w.duration_s();
      TextGridTier wt{"words", {}}, pt{"phones", {}};
      double cursor = 0.0;
      for (std::size_t k = 0; k < canonical.size(); ++k) {
        const auto [s, e] = bounds[k];
        if (s > cursor) {
          wt.intervals.push_back({cursor, s, ""});
          pt.intervals.push_back({cursor, s, "sil"});
        }
        std::string label = alphabet.symbol(canonical[k]);
        if (spk.annotate && actual[k] != canonical[k]) {
          label += "," + alphabet.symbol(actual[k]) + ",s";
        }
        wt.intervals.push_back({s, e, words[k]});
        pt.intervals.push_back({s, e, label});
        cursor = e;
      }
      if (tg.xmax > cursor) {
        wt.intervals.push_back({cursor, tg.xmax, ""});
        pt.intervals.push_back({cursor, tg.xmax, "sil"});
      }
      tg.tiers = {wt, pt};
      const char* sub = spk.annotate ? "annotation" : "textgrid";
      WriteText(dir / sub / (std::string(stem) + ".TextGrid"), tg.Serialize());
      ++summary.utterances;
    }
  }
  return summary;
}

}  // namespace mdd
