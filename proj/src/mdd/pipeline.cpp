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

#include "mdd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "mdd/corpus_layout.hpp"
#include "mdd/ctc.hpp"
#include "mdd/feature_archive.hpp"
#include "mdd/metrics.hpp"
#include "mdd/trainer.hpp"
#include "mdd/wav.hpp"

namespace fs = std::filesystem;

namespace mdd {

std::string StagePaths::SplitDir(const std::string& split) const { return (fs::path(data_dir) / split).string(); }

std::string StagePaths::Hypotheses(const std::string& split) const {
  return (fs::path(data_dir).parent_path() / "decode" / ("hyp." + split + ".txt")).string();
}

std::string StagePaths::Report(const std::string& split) const {
  return (fs::path(data_dir).parent_path() / "eval" / ("report." + split + ".txt")).string();
}

StagePaths StagePaths::For(const std::string& workdir) {
  const fs::path w(workdir);
  StagePaths p;
  p.data_dir = (w / "data").string();
  p.manifest = (w / "data" / "manifest.tsv").string();
  p.features_ark = (w / "features" / "feats.ark").string();
  p.features_index = (w / "features" / "feats.index").string();
  p.cmvn = (w / "features" / "cmvn.txt").string();
  p.features_summary = (w / "features" / "summary.txt").string();
  p.lm = (w / "lm" / "phone.arpa").string();
  p.checkpoint = (w / "exp" / "model.ckpt").string();
  p.last_checkpoint = (w / "exp" / "last.ckpt").string();
  p.train_log = (w / "exp" / "train.log").string();
  return p;
}

namespace {

const Split kSplits[] = {Split::kTrain, Split::kValidation, Split::kTest};

void WriteFile(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError("cannot write " + path);
  f << text;
  if (!f) throw RuntimeError("failed writing " + path);
}

std::string ReadFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void RequireFile(const std::string& path, const std::string& hint) {
  if (!fs::is_regular_file(path)) throw ValidationError("missing " + path + " (" + hint + ")");
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; results must be
// written to per-index slots so the outcome does not depend on scheduling.
template <typename Fn>
void ParallelFor(std::size_t n, int threads, Fn fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

Waveform LoadUtteranceAudio(const Utterance& u, int target_hz) {
  Waveform w = LoadWav(u.wav_path);
  if (u.segment) {
    const auto begin = static_cast<std::size_t>(std::llround(u.segment->start_s * w.sample_rate_hz));
    const auto end = static_cast<std::size_t>(std::llround(u.segment->end_s * w.sample_rate_hz));
    if (begin >= end || end > w.samples.size() + 1) {
      throw ValidationError("segment " + FormatSeconds(u.segment->start_s) + "-" + FormatSeconds(u.segment->end_s) +
                            " outside recording " + u.wav_path);
    }
    w.samples = std::vector<double>(w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                                    w.samples.begin() + static_cast<std::ptrdiff_t>(std::min(end, w.samples.size())));
  }
  if (w.sample_rate_hz != target_hz) w = Resample(w, target_hz);
  return w;
}

std::vector<std::size_t> IndicesOf(const CorpusManifest& m, Split s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.splits[i] == s) out.push_back(i);
  }
  return out;
}

struct LoadedSplit {
  std::vector<TrainExample> examples;
  std::vector<const Utterance*> utterances;
  int missing = 0;
};

LoadedSplit LoadSplitFeatures(const CorpusManifest& m, Split s, FeatureArchiveReader& reader) {
  LoadedSplit out;
  for (std::size_t i : IndicesOf(m, s)) {
    const Utterance& u = m.utterances[i];
    if (!reader.Contains(u.utterance_id)) {
      ++out.missing;
      continue;
    }
    TrainExample ex;
    ex.utterance_id = u.utterance_id;
    ex.features = reader.Read(u.utterance_id);
    ex.canonical = u.canonical;
    ex.target = u.Target();
    if (ex.canonical.empty() || ex.target.empty()) {
      ++out.missing;
      continue;
    }
    out.examples.push_back(std::move(ex));
    out.utterances.push_back(&u);
  }
  return out;
}

std::string FormatDouble(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::uint64_t StageSeed(const PipelineConfig& cfg, const char* stage) { return cfg.seed ^ StableHash(stage); }

}  // namespace

PhonemeAlphabet LoadAlphabet(const PipelineConfig& cfg) {
  return cfg.alphabet.empty() ? PhonemeAlphabet::Default() : PhonemeAlphabet::Load(cfg.alphabet);
}

ConfusionTable LoadConfusionTable(const PipelineConfig& cfg, const PhonemeAlphabet& alphabet) {
  return cfg.confusion_table.empty() ? ConfusionTable::Default(alphabet)
                                     : ConfusionTable::Load(cfg.confusion_table, alphabet);
}

CorpusManifest LoadPreparedManifest(const PipelineConfig& cfg, const PhonemeAlphabet& alphabet) {
  const StagePaths p = StagePaths::For(cfg.workdir);
  RequireFile(p.manifest, "run 'prepare' first");
  std::vector<std::pair<std::string, std::pair<Utterance, Split>>> rows;
  for (Split s : kSplits) {
    const std::string dir = p.SplitDir(SplitName(s));
    if (!fs::is_directory(dir)) continue;
    CorpusManifest part = ParseKaldiDir(dir, alphabet);
    for (auto& u : part.utterances) rows.push_back({u.utterance_id, {std::move(u), s}});
  }
  std::sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.first < b.first; });
  CorpusManifest m;
  for (auto& r : rows) {
    m.utterances.push_back(std::move(r.second.first));
    m.splits.push_back(r.second.second);
  }
  m.Validate();
  return m;
}

StageReport RunPrepare(const PipelineConfig& cfg) {
  cfg.Validate();
  if (cfg.corpus.empty()) throw ValidationError("paths.corpus is empty; nothing to prepare");
  const PhonemeAlphabet alphabet = LoadAlphabet(cfg);
  std::vector<CorpusManifest> parts;
  for (const auto& root : cfg.corpus) parts.push_back(IngestCorpus(root, alphabet));
  CorpusManifest m = DefaultSplit(MergeManifests(parts));
  {
    std::vector<std::size_t> order(m.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return m.utterances[a].utterance_id < m.utterances[b].utterance_id; });
    CorpusManifest sorted;
    for (std::size_t i : order) {
      sorted.utterances.push_back(m.utterances[i]);
      sorted.splits.push_back(m.splits[i]);
    }
    m = std::move(sorted);
  }

  std::vector<std::string> problems;
  for (const auto& u : m.utterances) {
    if (!u.wav_path.empty() && u.wav_path.back() == '|') continue;
    if (!fs::is_regular_file(u.wav_path)) problems.push_back(u.utterance_id + ": missing audio file " + u.wav_path);
    if (u.canonical.empty()) problems.push_back(u.utterance_id + ": no canonical phoneme sequence");
  }
  if (!problems.empty()) throw ValidationError(Join(problems, "\n"));

  const StagePaths p = StagePaths::For(cfg.workdir);
  fs::create_directories(p.data_dir);
  std::ostringstream manifest, summary;
  manifest << "utterance_id\tspeaker\tsplit\tcanonical_len\tannotated\twav\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& u = m.utterances[i];
    manifest << u.utterance_id << '\t' << u.speaker_id << '\t' << SplitName(m.splits[i]) << '\t' << u.canonical.size()
             << '\t' << (u.annotation ? "yes" : "no") << '\t' << u.wav_path << '\n';
  }
  for (Split s : kSplits) {
    const std::string dir = p.SplitDir(SplitName(s));
    fs::remove_all(dir);
    CorpusManifest part = m.Subset(s);
    summary << SplitName(s) << ": " << part.size() << " utterances\n";
    if (part.size() > 0) EmitKaldiDir(part, dir, alphabet);
  }
  WriteFile(p.manifest, manifest.str());
  WriteFile((fs::path(p.data_dir) / "phones.txt").string(), alphabet.Serialize());
  StageReport r;
  r.summary = "prepared " + std::to_string(m.size()) + " utterances into " + p.data_dir + "\n" + summary.str();
  return r;
}

StageReport RunFeatures(const PipelineConfig& cfg) {
  cfg.Validate();
  const PhonemeAlphabet alphabet = LoadAlphabet(cfg);
  const CorpusManifest m = LoadPreparedManifest(cfg, alphabet);
  const StagePaths p = StagePaths::For(cfg.workdir);

  std::vector<std::optional<FeatureMatrix>> raw(m.size());
  std::vector<std::string> errors(m.size());
  ParallelFor(m.size(), cfg.threads, [&](std::size_t i) {
    try {
      raw[i] = ComputeFbank(LoadUtteranceAudio(m.utterances[i], cfg.fbank.sample_rate_hz), cfg.fbank);
      if (raw[i]->num_frames() == 0) {
        raw[i].reset();
        errors[i] = "audio shorter than one frame";
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  StageReport r;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!raw[i]) r.messages.push_back("skipping " + m.utterances[i].utterance_id + ": " + errors[i]);
  }
  r.warnings = static_cast<int>(r.messages.size());

  CmvnStats stats;
  bool any_train = false;
  for (std::size_t i = 0; i < m.size(); ++i) any_train = any_train || (raw[i] && m.splits[i] == Split::kTrain);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (raw[i] && (!any_train || m.splits[i] == Split::kTrain)) stats.Accumulate(*raw[i]);
  }
  if (stats.count == 0) throw RuntimeError("no utterance produced features");
  fs::create_directories(fs::path(p.cmvn).parent_path());
  stats.Save(p.cmvn);

  FeatureArchiveWriter writer(p.features_ark, p.features_index);
  int written = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!raw[i]) continue;
    writer.Write(m.utterances[i].utterance_id, StackFrames(ApplyCmvn(*raw[i], stats, cfg.norm_vars)).frames);
    ++written;
  }
  writer.Close();

  std::ostringstream s;
  s << "utterances=" << m.size() << "\nwritten=" << written << "\nwarnings=" << r.warnings << "\n";
  for (const auto& msg : r.messages) s << "warning: " << msg << "\n";
  WriteFile(p.features_summary, s.str());
  r.summary = "features: " + std::to_string(written) + " of " + std::to_string(m.size()) + " utterances, " +
              std::to_string(r.warnings) + " warnings\n";
  return r;
}

StageReport RunTrainLm(const PipelineConfig& cfg) {
  cfg.Validate();
  const PhonemeAlphabet alphabet = LoadAlphabet(cfg);
  const CorpusManifest m = LoadPreparedManifest(cfg, alphabet);
  std::vector<std::vector<PhonemeId>> train, val;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.splits[i] == Split::kTrain) train.push_back(m.utterances[i].Target());
    if (m.splits[i] == Split::kValidation) val.push_back(m.utterances[i].Target());
  }
  if (train.empty()) throw ValidationError("train-lm: the training split is empty");
  const NGramModel lm = NGramModel::Train(train, cfg.lm_order, alphabet, cfg.lm_smoothing);
  const StagePaths p = StagePaths::For(cfg.workdir);
  fs::create_directories(fs::path(p.lm).parent_path());
  lm.SaveArpa(p.lm);
  StageReport r;
  r.summary = "phone " + std::to_string(cfg.lm_order) + "-gram over " + std::to_string(train.size()) +
              " sentences -> " + p.lm + "\ntrain perplexity " + FormatDouble(lm.Perplexity(train), "%.4f") + "\n";
  if (!val.empty()) r.summary += "validation perplexity " + FormatDouble(lm.Perplexity(val), "%.4f") + "\n";
  return r;
}

StageReport RunTrain(const PipelineConfig& cfg, const ProgressFn& progress) {
  cfg.Validate();
  const PhonemeAlphabet alphabet = LoadAlphabet(cfg);
  const ConfusionTable table = LoadConfusionTable(cfg, alphabet);
  const CorpusManifest m = LoadPreparedManifest(cfg, alphabet);
  const StagePaths p = StagePaths::For(cfg.workdir);
  RequireFile(p.features_index, "run 'features' first");
  FeatureArchiveReader reader(p.features_ark, p.features_index);
  LoadedSplit train = LoadSplitFeatures(m, Split::kTrain, reader);
  LoadedSplit val = LoadSplitFeatures(m, Split::kValidation, reader);
  if (train.examples.empty()) throw ValidationError("train: no training utterances with features");

  ModelConfig mc = cfg.model;
  mc.vocab_size = alphabet.size();
  mc.input_dim = static_cast<int>(train.examples.front().features.cols());
  AcousticModel model(mc, StageSeed(cfg, "model-init"));

  TrainOptions o;
  o.lr = cfg.lr;
  o.beta1 = cfg.beta1;
  o.beta2 = cfg.beta2;
  o.adam_eps = cfg.adam_eps;
  o.clip_norm = cfg.clip_norm;
  o.epochs = cfg.epochs;
  o.batch_size = cfg.batch_size;
  o.seed = StageSeed(cfg, "train");
  o.augment = cfg.augment;
  o.augment.seed = StageSeed(cfg, "augment");
  o.freeze_augmentation = cfg.freeze_augmentation;
  o.stop_at_per = cfg.stop_at_per;

  std::string log;
  const TrainResult res = Train(std::move(model), train.examples, val.examples, o, alphabet, table,
                                [&](const EpochLog& e) {
                                  log += e.Format() + "\n";
                                  if (progress) progress(e.Format());
                                });
  fs::create_directories(fs::path(p.checkpoint).parent_path());
  WriteFile(p.train_log, log);
  res.best.SaveCheckpoint(p.checkpoint);
  res.last.SaveCheckpoint(p.last_checkpoint);

  StageReport r;
  r.warnings = train.missing + val.missing;
  if (r.warnings > 0) {
    r.messages.push_back(std::to_string(r.warnings) + " utterances lacked features or phonemes and were left out");
  }
  r.summary = "trained " + std::string(VariantName(mc.variant)) + " model (" + std::to_string(CountParams(mc)) +
              " parameters) on " + std::to_string(train.examples.size()) + " utterances; best validation PER " +
              FormatDouble(res.best_val_per) + " at epoch " + std::to_string(res.best_epoch) + "\n";
  return r;
}

StageReport RunDecode(const PipelineConfig& cfg) {
  cfg.Validate();
  const PhonemeAlphabet alphabet = LoadAlphabet(cfg);
  const StagePaths p = StagePaths::For(cfg.workdir);
  RequireFile(p.checkpoint, "run 'train' first");
  AcousticModel model = AcousticModel::LoadCheckpoint(p.checkpoint);
  if (model.config().vocab_size != alphabet.size()) {
    throw ValidationError("checkpoint vocabulary (" + std::to_string(model.config().vocab_size) +
                          ") does not match the alphabet (" + std::to_string(alphabet.size()) + ")");
  }
  std::optional<NGramModel> lm;
  if (cfg.use_lm) {
    RequireFile(p.lm, "run 'train-lm' first or set decode.use_lm = false");
    lm = NGramModel::LoadArpa(p.lm, alphabet);
  }
  const CorpusManifest m = LoadPreparedManifest(cfg, alphabet);
  RequireFile(p.features_index, "run 'features' first");
  FeatureArchiveReader reader(p.features_ark, p.features_index);
  const LoadedSplit data = LoadSplitFeatures(m, ParseSplit(cfg.decode_split), reader);

  std::optional<NGramScorer> scorer;
  if (lm) scorer.emplace(*lm);
  BeamOptions bo;
  bo.beam = cfg.beam;
  bo.lm = scorer ? &*scorer : nullptr;
  bo.lm_weight = cfg.lm_weight;
  bo.insertion_bonus = cfg.insertion_bonus;

  std::vector<std::string> lines(data.examples.size());
  ParallelFor(data.examples.size(), cfg.threads, [&](std::size_t i) {
    const auto& ex = data.examples[i];
    const Matrix lp = model.LogProbs(ex.features, ex.canonical);
    const BeamResult br = BeamDecode(lp, bo);
    std::string line = ex.utterance_id;
    for (const auto& s : alphabet.Decode(br.prefix)) line += " " + s;
    lines[i] = line + "\n";
  });
  std::string out;
  for (const auto& l : lines) out += l;
  WriteFile(p.Hypotheses(cfg.decode_split), out);

  StageReport r;
  r.warnings = data.missing;
  if (data.missing > 0) r.messages.push_back(std::to_string(data.missing) + " utterances lacked features");
  r.summary = "decoded " + std::to_string(data.examples.size()) + " " + cfg.decode_split + " utterances -> " +
              p.Hypotheses(cfg.decode_split) + "\n";
  return r;
}

StageReport RunEvaluate(const PipelineConfig& cfg) {
  cfg.Validate();
  const PhonemeAlphabet alphabet = LoadAlphabet(cfg);
  const StagePaths p = StagePaths::For(cfg.workdir);
  const std::string hyp_path = p.Hypotheses(cfg.decode_split);
  RequireFile(hyp_path, "run 'decode' first");
  const CorpusManifest m = LoadPreparedManifest(cfg, alphabet);

  std::map<std::string, std::vector<PhonemeId>> hyps;
  std::istringstream is(ReadFile(hyp_path));
  std::string line;
  while (std::getline(is, line)) {
    auto f = SplitWhitespace(line);
    if (f.empty()) continue;
    const std::string id = f.front();
    f.erase(f.begin());
    hyps[id] = alphabet.Encode(f);
  }

  StageReport r;
  MddCounts counts;
  EditCounts edits;
  std::int64_t n = 0;
  const Split split = ParseSplit(cfg.decode_split);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.splits[i] != split) continue;
    const Utterance& u = m.utterances[i];
    auto it = hyps.find(u.utterance_id);
    if (it == hyps.end()) {
      r.messages.push_back("no hypothesis for " + u.utterance_id);
      continue;
    }
    const auto actual = u.Target();
    counts += HierarchicalEval(u.canonical, actual, it->second, u.annotation ? &*u.annotation : nullptr);
    edits += CountEdits(actual, it->second);
    ++n;
  }
  r.warnings = static_cast<int>(r.messages.size());
  if (n == 0) throw ValidationError("evaluate: no decoded utterances in split '" + cfg.decode_split + "'");
  MddReport report =
      Summarize(counts, edits.ref_length > 0 ? std::optional<double>(static_cast<double>(edits.errors()) /
                                                                     static_cast<double>(edits.ref_length))
                                             : std::nullopt);
  report.utterances = n;
  r.summary = report.Format();
  WriteFile(p.Report(cfg.decode_split), r.summary);
  return r;
}

StageReport RunAugmentPreview(const PipelineConfig& cfg, int limit, int epoch) {
  cfg.Validate();
  const PhonemeAlphabet alphabet = LoadAlphabet(cfg);
  const ConfusionTable table = LoadConfusionTable(cfg, alphabet);
  const CorpusManifest m = LoadPreparedManifest(cfg, alphabet);
  AugmentPolicy policy = cfg.augment;
  policy.seed = StageSeed(cfg, "augment");
  StageReport r;
  std::ostringstream os;
  os << "strategy=" << StrategyName(policy.strategy) << " rate=" << policy.rate << " epoch=" << epoch << "\n";
  int shown = 0, changed = 0;
  for (std::size_t i = 0; i < m.size() && shown < limit; ++i) {
    if (m.splits[i] != Split::kTrain) continue;
    const Utterance& u = m.utterances[i];
    const auto aug = Augment(u.canonical, policy, alphabet, table, u.utterance_id, epoch);
    if (aug != u.canonical) ++changed;
    os << u.utterance_id << "\n  canonical: " << Join(alphabet.Decode(u.canonical), " ")
       << "\n  augmented: " << Join(alphabet.Decode(aug), " ") << "\n  target:    "
       << Join(alphabet.Decode(u.Target()), " ") << "\n";
    ++shown;
  }
  os << shown << " shown, " << changed << " changed\n";
  r.summary = os.str();
  return r;
}

StageReport RunSynthCorpus(const std::string& root, const SynthOptions& opts) {
  const SynthSummary s = WriteToyCorpus(root, opts);
  StageReport r;
  r.summary = "wrote " + std::to_string(s.utterances) + " utterances under " + root + " (" +
              std::to_string(s.mispronounced_positions) + " of " + std::to_string(s.total_test_positions) +
              " test positions mispronounced); alphabet " + (fs::path(root) / "phones.txt").string() + "\n";
  return r;
}

}  // namespace mdd
