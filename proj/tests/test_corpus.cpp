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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "mdd/corpus.hpp"
#include "mdd/corpus_layout.hpp"
#include "mdd/textgrid.hpp"
#include "mdd/wav.hpp"
#include "test_util.hpp"

using namespace mdd;

namespace {

void PutU32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>(v >> 8));
}

std::string WavBytes(int channels, int rate, int bits, const std::vector<std::int16_t>& samples) {
  std::string data;
  for (auto s : samples) PutU16(data, static_cast<std::uint16_t>(s));
  std::string b = "RIFF";
  PutU32(b, static_cast<std::uint32_t>(36 + data.size()));
  b += "WAVEfmt ";
  PutU32(b, 16);
  PutU16(b, 1);
  PutU16(b, static_cast<std::uint16_t>(channels));
  PutU32(b, static_cast<std::uint32_t>(rate));
  PutU32(b, static_cast<std::uint32_t>(rate * channels * bits / 8));
  PutU16(b, static_cast<std::uint16_t>(channels * bits / 8));
  PutU16(b, static_cast<std::uint16_t>(bits));
  b += "data";
  PutU32(b, static_cast<std::uint32_t>(data.size()));
  return b + data;
}

Waveform Tone(double hz, int rate, std::size_t n) {
  Waveform w;
  w.sample_rate_hz = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * i / rate);
  return w;
}

// Frequency of the largest plain-DFT magnitude, scanning bins 1..n/2.
double PeakFrequency(const Waveform& w) {
  const std::size_t n = w.samples.size();
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += w.samples[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      arg = k;
    }
  }
  return static_cast<double>(arg) * w.sample_rate_hz / static_cast<double>(n);
}

std::string PhonesTextGrid(const std::vector<std::string>& labels) {
  TextGrid g;
  g.xmax = 0.1 * static_cast<double>(labels.size());
  TextGridTier words{"words", {{0.0, g.xmax, "word"}}};
  TextGridTier phones{"phones", {}};
  for (std::size_t i = 0; i < labels.size(); ++i) phones.intervals.push_back({0.1 * i, 0.1 * (i + 1), labels[i]});
  g.tiers = {words, phones};
  return g.Serialize();
}

}  // namespace

TEST_CASE("alphabet files") {
  std::string text;
  const auto def = PhonemeAlphabet::Default();
  CHECK(def.size() == 42);
  CHECK(def.blank_id() == 42);
  CHECK(def.output_dim() == 43);
  CHECK(PhonemeAlphabet::Parse(def.Serialize()) == def);

  const auto one = PhonemeAlphabet::Parse("AA vowel\n");
  CHECK(one.size() == 1);
  CHECK(one.blank_id() == 1);
  CHECK_THROWS_AS(PhonemeAlphabet::Parse("AA vowel\nAA vowel\n"), ValidationError);
  CHECK_THROWS_AS(PhonemeAlphabet::Parse("AA fricative\n"), ValidationError);
  CHECK_THROWS_AS(PhonemeAlphabet::Parse(""), ValidationError);
}

TEST_CASE("phoneme classes and lookup") {
  const auto a = PhonemeAlphabet::Default();
  CHECK(a.Classify(a.Lookup("IY")) == PhoneClass::kVowel);
  CHECK(a.Classify(a.Lookup("Z")) == PhoneClass::kConsonant);
  CHECK(a.Classify(a.Lookup("sil")) == PhoneClass::kSilence);
  CHECK_THROWS_AS(a.Classify(a.blank_id()), ValidationError);
  CHECK(a.Lookup("ah0") == a.Lookup("AH"));
  CHECK_FALSE(a.Find("QQ").has_value());
  CHECK_THROWS_AS(a.Lookup("QQ"), ValidationError);
  const auto ids = a.Encode({"dh", "ah1"});
  CHECK(a.Decode(ids) == std::vector<std::string>{"DH", "AH"});
  CHECK(a.MembersOf(PhoneClass::kVowel).size() == 15);
  CHECK(a.MembersOf(PhoneClass::kConsonant).size() == 24);
}

TEST_CASE("annotation tags") {
  const auto a = PhonemeAlphabet::Default();
  const auto sub = ParseAnnotationTag("Z,S,s", a);
  CHECK(sub.kind == EventKind::kSubstitution);
  CHECK(sub.cpl == a.Lookup("Z"));
  CHECK(sub.ppl == a.Lookup("S"));
  const auto ok = ParseAnnotationTag("AA", a);
  CHECK(ok.kind == EventKind::kCorrect);
  CHECK(ok.cpl == ok.ppl);
  const auto del = ParseAnnotationTag("D,sil,d", a);
  CHECK(del.kind == EventKind::kDeletion);
  CHECK_FALSE(del.ppl.has_value());
  const auto add = ParseAnnotationTag("sil,AH,a", a);
  CHECK(add.kind == EventKind::kAddition);
  CHECK_FALSE(add.cpl.has_value());
  for (const char* t : {"Z,S,s", "AA", "D,sil,d", "sil,AH,a"}) CHECK(FormatAnnotationTag(ParseAnnotationTag(t, a), a) == t);
  CHECK_THROWS_AS(ParseAnnotationTag("Z,Z,s", a), ValidationError);
  CHECK_THROWS_AS(ParseAnnotationTag("Z,S,x", a), ValidationError);
  CHECK_THROWS_AS(ParseAnnotationTag("D,sil,s", a), ValidationError);
}

TEST_CASE("actual sequence") {
  const auto a = PhonemeAlphabet::Default();
  const PhonemeId dh = a.Lookup("DH"), ah = a.Lookup("AH"), d = a.Lookup("D"), k = a.Lookup("K"),
                  ae = a.Lookup("AE"), t = a.Lookup("T");
  std::vector<PhonemeId> canon;
  auto events = EventsFromTags({"DH,D,s", "AH"}, a, &canon);
  CHECK(canon == std::vector<PhonemeId>{dh, ah});
  CHECK(ActualSequence(canon, events) == std::vector<PhonemeId>{d, ah});
  CHECK(ActualSequence({k, ae, t}, {}) == std::vector<PhonemeId>{k, ae, t});
  events = EventsFromTags({"T,sil,d"}, a, &canon);
  CHECK(ActualSequence(canon, events).empty());
  events = EventsFromTags({"K", "sil,AH,a", "T"}, a, &canon);
  CHECK(canon == std::vector<PhonemeId>{k, t});
  CHECK(ActualSequence(canon, events) == std::vector<PhonemeId>{k, ah, t});
}

TEST_CASE("speaker split") {
  CHECK(DefaultSplitFor("NJS") == Split::kTest);
  CHECK(DefaultSplitFor("FADG0") == Split::kTrain);
  CHECK(DefaultSplitFor("THV") == Split::kValidation);
  CHECK(ParseSplit(SplitName(Split::kValidation)) == Split::kValidation);
  CHECK_THROWS_AS(ParseSplit("holdout"), ValidationError);
}

TEST_CASE("kaldi directory parse and emit") {
  const auto a = PhonemeAlphabet::Default();
  test::TempDir dir("kaldi");
  test::WriteFile(dir.str("in/text"), "LXC_arctic_a0103 but there came no promise from the bow of the canoe\n");
  test::WriteFile(dir.str("in/wav.scp"), "arctic_a0103 /data/LXC/wav/arctic_a0103.wav\n");
  test::WriteFile(dir.str("in/utt2spk"), "LXC_arctic_a0103 LXC\n");
  test::WriteFile(dir.str("in/segments"), "LXC_arctic_a0103 arctic_a0103 13.0 22.0\n");
  test::WriteFile(dir.str("in/phn_text"), "LXC_arctic_a0103 B AH T\n");
  const auto m = ParseKaldiDir(dir.str("in"), a);
  REQUIRE(m.size() == 1);
  const auto& u = m.utterances[0];
  CHECK(u.speaker_id == "LXC");
  CHECK(u.words.size() == 11);
  REQUIRE(u.segment.has_value());
  CHECK(u.segment->start_s == 13.0);
  CHECK(u.segment->end_s == 22.0);
  CHECK(u.segment->recording_id == "arctic_a0103");

  EmitKaldiDir(m, dir.str("out"), a);
  CHECK(test::ReadFile(dir.str("out/utt2spk")) == "LXC_arctic_a0103 LXC\n");
  CHECK(test::ReadFile(dir.str("out/spk2utt")) == "LXC LXC_arctic_a0103\n");
  CHECK(test::ReadFile(dir.str("out/segments")) == "LXC_arctic_a0103 arctic_a0103 13.0 22.0\n");
  const auto again = ParseKaldiDir(dir.str("out"), a);
  CHECK(again.utterances[0].words == u.words);
  CHECK(again.utterances[0].canonical == u.canonical);
  CHECK(again.utterances[0].segment == u.segment);

  EmitKaldiDir(CorpusManifest{}, dir.str("empty"), a);
  for (const char* f : {"text", "wav.scp", "utt2spk", "spk2utt", "phn_text"}) {
    CHECK(std::filesystem::exists(dir.str(std::string("empty/") + f)));
    CHECK(test::ReadFile(dir.str(std::string("empty/") + f)).empty());
  }

  std::filesystem::create_directories(dir.str("nothing"));
  try {
    ParseKaldiDir(dir.str("nothing"), a);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("text") != std::string::npos);
    CHECK(msg.find("wav.scp") != std::string::npos);
    CHECK(msg.find("utt2spk") != std::string::npos);
  }
}

TEST_CASE("kaldi directory consistency errors") {
  const auto a = PhonemeAlphabet::Default();
  test::TempDir dir("kaldi_bad");
  test::WriteFile(dir.str("text"), "S1_u1 hello\nS1_u2 world\n");
  test::WriteFile(dir.str("wav.scp"), "S1_u1 a.wav\n");
  test::WriteFile(dir.str("utt2spk"), "S1_u1 S1\nS1_u2 S1\n");
  try {
    ParseKaldiDir(dir.str(), a);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("S1_u2") != std::string::npos);
  }
}

TEST_CASE("textgrid round trip") {
  const std::string text = PhonesTextGrid({"sil", "DH", "AH0", ""});
  const auto g = TextGrid::Parse(text);
  REQUIRE(g.tiers.size() == 2);
  CHECK(g.Tier("phones")->intervals.size() == 4);
  CHECK(g.Labels("phones") == std::vector<std::string>{"sil", "DH", "AH0"});
  CHECK(TextGrid::Parse(g.Serialize()).Serialize() == g.Serialize());
  CHECK(g.Tier("nope") == nullptr);
  CHECK_THROWS_AS(g.Labels("nope"), ValidationError);
  CHECK_THROWS_AS(TextGrid::Parse("garbage"), ValidationError);
}

TEST_CASE("l2-arctic layout ingest") {
  const auto a = PhonemeAlphabet::Default();
  test::TempDir dir("l2");
  test::WriteFile(dir.str("ABA/wav/arctic_a0001.wav"), WavBytes(1, 16000, 16, std::vector<std::int16_t>(160, 0)));
  test::WriteFile(dir.str("ABA/transcript/arctic_a0001.txt"), "Author of the danger trail.");
  test::WriteFile(dir.str("ABA/textgrid/arctic_a0001.TextGrid"), PhonesTextGrid({"sil", "AO1", "TH", "ER0", "sp"}));
  test::WriteFile(dir.str("NJS/wav/arctic_a0002.wav"), WavBytes(1, 16000, 16, std::vector<std::int16_t>(160, 0)));
  test::WriteFile(dir.str("NJS/transcript/arctic_a0002.txt"), "the bow");
  test::WriteFile(dir.str("NJS/annotation/arctic_a0002.TextGrid"),
                  PhonesTextGrid({"sil", "DH,D,s", "AH0", "B", "OW,AO,s", "sil,R,a"}));
  CHECK(DetectLayout(dir.str()) == CorpusLayout::kL2Arctic);
  const auto m = IngestCorpus(dir.str(), a);
  REQUIRE(m.size() == 2);
  const Utterance* aba = m.Find("ABA_arctic_a0001");
  REQUIRE(aba != nullptr);
  CHECK(aba->words == std::vector<std::string>{"author", "of", "the", "danger", "trail"});
  CHECK(a.Decode(aba->canonical) == std::vector<std::string>{"AO", "TH", "ER"});
  CHECK_FALSE(aba->annotation.has_value());
  const Utterance* njs = m.Find("NJS_arctic_a0002");
  REQUIRE(njs != nullptr);
  REQUIRE(njs->annotation.has_value());
  CHECK(a.Decode(njs->canonical) == std::vector<std::string>{"DH", "AH", "B", "OW"});
  CHECK(a.Decode(njs->Target()) == std::vector<std::string>{"D", "AH", "B", "AO", "R"});
  CHECK(DefaultSplit(m).splits[1] == Split::kTest);
}

TEST_CASE("timit layout ingest") {
  const auto a = PhonemeAlphabet::Default();
  test::TempDir dir("timit");
  test::WriteFile(dir.str("TRAIN/DR1/FCJF0/SA1.PHN"), "0 100 h#\n100 200 sh\n200 300 ix\n300 320 q\n320 400 dcl\n400 500 d\n500 600 h#\n");
  test::WriteFile(dir.str("TRAIN/DR1/FCJF0/SA1.WRD"), "100 300 she\n300 500 had\n");
  CHECK(DetectLayout(dir.str()) == CorpusLayout::kTimit);
  const auto m = IngestCorpus(dir.str(), a);
  REQUIRE(m.size() == 1);
  CHECK(m.utterances[0].utterance_id == "FCJF0_SA1");
  CHECK(a.Decode(m.utterances[0].canonical) == std::vector<std::string>{"SH", "IH", "D"});
  CHECK(m.utterances[0].words == std::vector<std::string>{"she", "had"});
  CHECK(FoldTimitPhone("q").empty());
  CHECK(FoldTimitPhone("ax") == "AH");
}

TEST_CASE("merge rejects duplicate ids") {
  CorpusManifest m;
  Utterance u;
  u.utterance_id = "S_1";
  u.speaker_id = "S";
  m.utterances.push_back(u);
  m.splits.push_back(Split::kTrain);
  CHECK(MergeManifests({m}).size() == 1);
  CHECK_THROWS_AS(MergeManifests({m, m}), ValidationError);
}

TEST_CASE("wav reading") {
  const auto w = ParseWav(WavBytes(1, 16000, 16, std::vector<std::int16_t>(16000, 1000)));
  CHECK(w.samples.size() == 16000);
  CHECK(w.duration_s() == doctest::Approx(1.0));
  CHECK(w.samples[0] == doctest::Approx(1000.0 / 32768.0));
  CHECK(ParseWav(WavBytes(1, 44100, 16, std::vector<std::int16_t>(441, 0))).sample_rate_hz == 44100);
  CHECK_THROWS_AS(ParseWav(WavBytes(2, 16000, 16, std::vector<std::int16_t>(32, 0))), ValidationError);
  CHECK_THROWS_AS(ParseWav("NIST_1A   1024"), ValidationError);
  CHECK_THROWS_AS(ParseWav("RIFF...."), ValidationError);
  CHECK_THROWS_AS(LoadWav("sox in.sph -t wav - |"), ValidationError);

  test::TempDir dir("wav");
  Waveform t = Tone(440.0, 16000, 800);
  SaveWav(dir.str("t.wav"), t);
  const auto back = LoadWav(dir.str("t.wav"));
  REQUIRE(back.samples.size() == t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) CHECK(std::abs(back.samples[i] - t.samples[i]) <= 1.0 / 32768.0);
}

TEST_CASE("resampling") {
  const Waveform src = Tone(1000.0, 44100, 44100);
  const Waveform dst = Resample(src, 16000);
  CHECK(dst.sample_rate_hz == 16000);
  CHECK(dst.samples.size() == 16000);
  const Waveform same = Resample(src, 44100);
  CHECK(same.samples == src.samples);

  const Waveform shorter = Resample(Tone(1000.0, 44100, 4410), 16000);
  REQUIRE(shorter.samples.size() == 1600);
  // 1600-point DFT at 16 kHz has 10 Hz bins.
  CHECK(std::abs(PeakFrequency(shorter) - 1000.0) <= 10.0);
}
