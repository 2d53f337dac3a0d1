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

#include "mdd/mdd.h"

#include <cstdlib>
#include <cstring>
#include <functional>
#include <memory>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdd/config.hpp"
#include "mdd/ctc.hpp"
#include "mdd/metrics.hpp"
#include "mdd/model.hpp"
#include "mdd/ngram.hpp"
#include "mdd/pipeline.hpp"

struct mdd_config {
  mdd::PipelineConfig cfg;
};

struct mdd_report {
  mdd::StageReport report;
};

struct mdd_alphabet {
  mdd::PhonemeAlphabet alphabet;
};

struct mdd_lm {
  mdd::NGramModel model;
  mdd::PhonemeAlphabet alphabet;
};

struct mdd_model {
  mdd::AcousticModel model;
};

namespace {

thread_local std::string g_last_error;

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Fn>
mdd_status Guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return MDD_OK;
  } catch (const ArgumentError& e) {
    g_last_error = e.what();
    return MDD_ERR_ARGUMENT;
  } catch (const mdd::ValidationError& e) {
    g_last_error = e.what();
    return MDD_ERR_VALIDATION;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MDD_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MDD_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return MDD_ERR_RUNTIME;
  }
}

void Need(const void* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " is NULL");
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<mdd::PhonemeId> Ids(const int32_t* p, size_t n) {
  if (n > 0) Need(p, "sequence");
  return std::vector<mdd::PhonemeId>(p, p + n);
}

mdd::Matrix FromBuffer(const double* data, size_t rows, size_t cols) {
  Need(data, "matrix");
  return Eigen::Map<const mdd::Matrix>(data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void CopyIds(const std::vector<mdd::PhonemeId>& v, int32_t* out, size_t capacity, size_t* out_len) {
  Need(out_len, "out_len");
  *out_len = v.size();
  if (v.size() > capacity) throw std::length_error("output buffer too small");
  if (!v.empty()) {
    Need(out, "out");
    std::memcpy(out, v.data(), v.size() * sizeof(int32_t));
  }
}

mdd_status GuardBuffer(const std::function<void()>& fn) {
  try {
    g_last_error.clear();
    fn();
    return MDD_OK;
  } catch (const std::length_error& e) {
    g_last_error = e.what();
    return MDD_ERR_BUFFER_TOO_SMALL;
  } catch (...) {
    return Guard([] { throw; });
  }
}

}  // namespace

extern "C" {

const char* mdd_version(void) { return "1.0.0"; }

const char* mdd_last_error(void) { return g_last_error.c_str(); }

void mdd_string_free(char* s) { std::free(s); }

mdd_status mdd_config_new(mdd_config** out) {
  return Guard([&] {
    Need(out, "out");
    *out = new mdd_config();
  });
}

mdd_status mdd_config_load(const char* path, mdd_config** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    auto c = std::make_unique<mdd_config>();
    c->cfg = mdd::PipelineConfig::Load(path);
    *out = c.release();
  });
}

mdd_status mdd_config_set(mdd_config* cfg, const char* key, const char* value) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(key, "key");
    Need(value, "value");
    cfg->cfg.Set(key, value);
  });
}

mdd_status mdd_config_get(const mdd_config* cfg, const char* key, char** out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(key, "key");
    Need(out, "out");
    *out = CopyString(cfg->cfg.Get(key));
  });
}

mdd_status mdd_config_dump(const mdd_config* cfg, char** out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(out, "out");
    *out = CopyString(cfg->cfg.Dump());
  });
}

mdd_status mdd_config_validate(const mdd_config* cfg) {
  return Guard([&] {
    Need(cfg, "cfg");
    cfg->cfg.Validate();
  });
}

void mdd_config_free(mdd_config* cfg) { delete cfg; }

mdd_status mdd_run_stage(const mdd_config* cfg, const char* stage, mdd_progress_fn progress, void* user,
                         mdd_report** out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(stage, "stage");
    Need(out, "out");
    const std::string s(stage);
    auto r = std::make_unique<mdd_report>();
    if (s == "prepare") r->report = mdd::RunPrepare(cfg->cfg);
    else if (s == "features") r->report = mdd::RunFeatures(cfg->cfg);
    else if (s == "train-lm") r->report = mdd::RunTrainLm(cfg->cfg);
    else if (s == "train") {
      mdd::ProgressFn fn;
      if (progress) fn = [&](const std::string& line) { progress(line.c_str(), user); };
      r->report = mdd::RunTrain(cfg->cfg, fn);
    } else if (s == "decode") r->report = mdd::RunDecode(cfg->cfg);
    else if (s == "evaluate") r->report = mdd::RunEvaluate(cfg->cfg);
    else throw ArgumentError("unknown stage '" + s + "'");
    *out = r.release();
  });
}

mdd_status mdd_run_augment_preview(const mdd_config* cfg, int limit, int epoch, mdd_report** out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(out, "out");
    if (limit < 0) throw ArgumentError("limit must be non-negative");
    auto r = std::make_unique<mdd_report>();
    r->report = mdd::RunAugmentPreview(cfg->cfg, limit, epoch);
    *out = r.release();
  });
}

void mdd_synth_options_default(mdd_synth_options* opts) {
  if (!opts) return;
  const mdd::SynthOptions d;
  opts->train_utterances = d.train_utterances;
  opts->validation_utterances = d.validation_utterances;
  opts->test_utterances = d.test_utterances;
  opts->min_phonemes = d.min_phonemes;
  opts->max_phonemes = d.max_phonemes;
  opts->mispronunciation_rate = d.mispronunciation_rate;
  opts->seed = d.seed;
}

mdd_status mdd_synth_corpus(const char* root, const mdd_synth_options* opts, mdd_report** out) {
  return Guard([&] {
    Need(root, "root");
    Need(out, "out");
    mdd::SynthOptions o;
    if (opts) {
      o.train_utterances = opts->train_utterances;
      o.validation_utterances = opts->validation_utterances;
      o.test_utterances = opts->test_utterances;
      o.min_phonemes = opts->min_phonemes;
      o.max_phonemes = opts->max_phonemes;
      o.mispronunciation_rate = opts->mispronunciation_rate;
      o.seed = opts->seed;
    }
    auto r = std::make_unique<mdd_report>();
    r->report = mdd::RunSynthCorpus(root, o);
    *out = r.release();
  });
}

const char* mdd_report_summary(const mdd_report* r) { return r ? r->report.summary.c_str() : ""; }

int mdd_report_warning_count(const mdd_report* r) { return r ? r->report.warnings : 0; }

const char* mdd_report_message(const mdd_report* r, int index) {
  if (!r || index < 0 || static_cast<size_t>(index) >= r->report.messages.size()) return nullptr;
  return r->report.messages[static_cast<size_t>(index)].c_str();
}

void mdd_report_free(mdd_report* r) { delete r; }

mdd_status mdd_alphabet_default(mdd_alphabet** out) {
  return Guard([&] {
    Need(out, "out");
    *out = new mdd_alphabet{mdd::PhonemeAlphabet::Default()};
  });
}

mdd_status mdd_alphabet_load(const char* path, mdd_alphabet** out) {
  return Guard([&] {
    Need(path, "path");
    Need(out, "out");
    auto a = std::make_unique<mdd_alphabet>();
    a->alphabet = mdd::PhonemeAlphabet::Load(path);
    *out = a.release();
  });
}

int mdd_alphabet_size(const mdd_alphabet* a) { return a ? a->alphabet.size() : 0; }

const char* mdd_alphabet_symbol(const mdd_alphabet* a, int32_t id) {
  if (!a || id < 0 || id >= a->alphabet.size()) return nullptr;
  return a->alphabet.symbol(id).c_str();
}

mdd_status mdd_alphabet_lookup(const mdd_alphabet* a, const char* label, int32_t* id) {
  return Guard([&] {
    Need(a, "alphabet");
    Need(label, "label");
    Need(id, "id");
    *id = a->alphabet.Lookup(label);
  });
}

mdd_status mdd_alphabet_classify(const mdd_alphabet* a, int32_t id, int* cls) {
  return Guard([&] {
    Need(a, "alphabet");
    Need(cls, "cls");
    *cls = static_cast<int>(a->alphabet.Classify(id));
  });
}

void mdd_alphabet_free(mdd_alphabet* a) { delete a; }

mdd_status mdd_ctc_collapse(const int32_t* path, size_t n, int32_t blank, int32_t* out, size_t capacity,
                            size_t* out_len) {
  return GuardBuffer([&] {
    const auto p = Ids(path, n);
    CopyIds(mdd::Collapse(p, blank), out, capacity, out_len);
  });
}

mdd_status mdd_ctc_loss(const double* logits, size_t frames, size_t classes, const int32_t* target,
                        size_t target_len, double* loss, double* grad, int* feasible) {
  return Guard([&] {
    Need(loss, "loss");
    if (classes < 1) throw ArgumentError("classes must be at least 1");
    const auto t = Ids(target, target_len);
    const auto r = mdd::CtcLoss(FromBuffer(logits, frames, classes), t);
    *loss = r.loss;
    if (feasible) *feasible = r.feasible ? 1 : 0;
    if (grad) std::memcpy(grad, r.grad.data(), frames * classes * sizeof(double));
  });
}

mdd_status mdd_greedy_decode(const double* log_probs, size_t frames, size_t classes, int32_t* out, size_t capacity,
                             size_t* out_len) {
  return GuardBuffer([&] {
    if (classes < 1) throw ArgumentError("classes must be at least 1");
    CopyIds(mdd::GreedyDecode(FromBuffer(log_probs, frames, classes)), out, capacity, out_len);
  });
}

mdd_status mdd_beam_decode(const double* log_probs, size_t frames, size_t classes, int beam, const mdd_lm* lm,
                           double lm_weight, double insertion_bonus, int32_t* out, size_t capacity, size_t* out_len,
                           double* score) {
  return GuardBuffer([&] {
    if (classes < 1) throw ArgumentError("classes must be at least 1");
    std::unique_ptr<mdd::NGramScorer> scorer;
    if (lm) {
      if (static_cast<int>(classes) - 1 != lm->model.vocab_size() - 2) {
        throw ArgumentError("classes does not match the language model vocabulary plus blank");
      }
      scorer = std::make_unique<mdd::NGramScorer>(lm->model);
    }
    mdd::BeamOptions o;
    o.beam = beam;
    o.lm = scorer.get();
    o.lm_weight = lm_weight;
    o.insertion_bonus = insertion_bonus;
    const auto r = mdd::BeamDecode(FromBuffer(log_probs, frames, classes), o);
    if (score) *score = r.score;
    CopyIds(r.prefix, out, capacity, out_len);
  });
}

mdd_status mdd_lm_train(const int32_t* const* sentences, const size_t* lengths, size_t count, int order,
                        const mdd_alphabet* alphabet, mdd_lm** out) {
  return Guard([&] {
    Need(alphabet, "alphabet");
    Need(out, "out");
    if (count > 0) {
      Need(sentences, "sentences");
      Need(lengths, "lengths");
    }
    std::vector<std::vector<mdd::PhonemeId>> corpus;
    for (size_t i = 0; i < count; ++i) corpus.push_back(Ids(sentences[i], lengths[i]));
    auto l = std::make_unique<mdd_lm>();
    l->alphabet = alphabet->alphabet;
    l->model = mdd::NGramModel::Train(corpus, order, l->alphabet);
    *out = l.release();
  });
}

mdd_status mdd_lm_load(const char* path, const mdd_alphabet* alphabet, mdd_lm** out) {
  return Guard([&] {
    Need(path, "path");
    Need(alphabet, "alphabet");
    Need(out, "out");
    auto l = std::make_unique<mdd_lm>();
    l->alphabet = alphabet->alphabet;
    l->model = mdd::NGramModel::LoadArpa(path, l->alphabet);
    *out = l.release();
  });
}

mdd_status mdd_lm_save(const mdd_lm* lm, const char* path) {
  return Guard([&] {
    Need(lm, "lm");
    Need(path, "path");
    lm->model.SaveArpa(path);
  });
}

mdd_status mdd_lm_score(const mdd_lm* lm, const int32_t* history, size_t history_len, int32_t next,
                        double* log10_prob) {
  return Guard([&] {
    Need(lm, "lm");
    Need(log10_prob, "log10_prob");
    const auto h = Ids(history, history_len);
    mdd::NGramModel::Gram gram(h.begin(), h.end());
    const int word = next == -1 ? lm->model.eos() : next;
    if (word < 0 || word >= lm->model.vocab_size()) throw ArgumentError("next is out of range");
    *log10_prob = lm->model.Score(gram, word);
  });
}

void mdd_lm_free(mdd_lm* lm) { delete lm; }

mdd_status mdd_count_params(const mdd_config* cfg, int input_dim, int vocab_size, int64_t* out) {
  return Guard([&] {
    Need(cfg, "cfg");
    Need(out, "out");
    mdd::ModelConfig mc = cfg->cfg.model;
    mc.input_dim = input_dim;
    mc.vocab_size = vocab_size;
    mc.Validate();
    *out = mdd::CountParams(mc);
  });
}

mdd_status mdd_model_load(const char* checkpoint, mdd_model** out) {
  return Guard([&] {
    Need(checkpoint, "checkpoint");
    Need(out, "out");
    *out = new mdd_model{mdd::AcousticModel::LoadCheckpoint(checkpoint)};
  });
}

mdd_status mdd_model_output_frames(const mdd_model* m, size_t frames, size_t* out) {
  return Guard([&] {
    Need(m, "model");
    Need(out, "out");
    if (frames < 1) throw ArgumentError("frames must be at least 1");
    *out = static_cast<size_t>(mdd::ModelConfig::DownsampledLength(static_cast<int>(frames)));
  });
}

int mdd_model_output_dim(const mdd_model* m) { return m ? m->model.config().output_dim() : 0; }

mdd_status mdd_model_log_probs(mdd_model* m, const double* features, size_t frames, size_t dim,
                               const int32_t* sentence, size_t sentence_len, double* out, size_t capacity) {
  return GuardBuffer([&] {
    Need(m, "model");
    Need(out, "out");
    if (static_cast<int>(dim) != m->model.config().input_dim) throw ArgumentError("feature width mismatch");
    if (frames < 1) throw ArgumentError("frames must be at least 1");
    const auto s = Ids(sentence, sentence_len);
    for (auto id : s) {
      if (id < 0 || id >= m->model.config().vocab_size) throw ArgumentError("sentence id out of range");
    }
    const mdd::Matrix lp = m->model.LogProbs(FromBuffer(features, frames, dim), s);
    if (static_cast<size_t>(lp.size()) > capacity) throw std::length_error("output buffer too small");
    std::memcpy(out, lp.data(), static_cast<size_t>(lp.size()) * sizeof(double));
  });
}

void mdd_model_free(mdd_model* m) { delete m; }

mdd_status mdd_edit_distance(const int32_t* ref, size_t ref_len, const int32_t* hyp, size_t hyp_len, int* distance) {
  return Guard([&] {
    Need(distance, "distance");
    *distance = mdd::EditDistance(mdd::Align(Ids(ref, ref_len), Ids(hyp, hyp_len)));
  });
}

mdd_status mdd_per(const int32_t* ref, size_t ref_len, const int32_t* hyp, size_t hyp_len, double* per) {
  return Guard([&] {
    Need(per, "per");
    *per = mdd::Per(Ids(ref, ref_len), Ids(hyp, hyp_len));
  });
}

mdd_status mdd_hierarchical_eval(const int32_t* canonical, size_t canonical_len, const int32_t* actual,
                                 size_t actual_len, const int32_t* recognized, size_t recognized_len,
                                 mdd_counts* out) {
  return Guard([&] {
    Need(out, "out");
    const auto c = mdd::HierarchicalEval(Ids(canonical, canonical_len), Ids(actual, actual_len),
                                         Ids(recognized, recognized_len));
    *out = mdd_counts{c.ta, c.fr, c.fa, c.cd, c.de};
  });
}

mdd_status mdd_summarize(const mdd_counts* counts, mdd_summary* out) {
  return Guard([&] {
    Need(counts, "counts");
    Need(out, "out");
    if (counts->ta < 0 || counts->fr < 0 || counts->fa < 0 || counts->cd < 0 || counts->de < 0) {
      throw ArgumentError("counts must be non-negative");
    }
    const auto r = mdd::Summarize(mdd::MddCounts{counts->ta, counts->fr, counts->fa, counts->cd, counts->de});
    auto put = [](const std::optional<double>& v, double* value, int* has) {
      *value = v.value_or(0.0);
      *has = v.has_value() ? 1 : 0;
    };
    put(r.recall, &out->recall, &out->has_recall);
    put(r.precision, &out->precision, &out->has_precision);
    put(r.f_measure, &out->f_measure, &out->has_f_measure);
    put(r.ta_rate, &out->ta_rate, &out->has_ta_rate);
    put(r.fr_rate, &out->fr_rate, &out->has_fr_rate);
    put(r.fa_rate, &out->fa_rate, &out->has_fa_rate);
    put(r.cd_rate, &out->cd_rate, &out->has_cd_rate);
    put(r.de_rate, &out->de_rate, &out->has_de_rate);
  });
}

}  // extern "C"
