/*
 * Copyright 2026 The mdd Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the mispronunciation detection toolkit.
 *
 * Every fallible call returns an mdd_status. On failure the message is
 * available from mdd_last_error() on the calling thread until the next call
 * on that thread. Objects are opaque; each *_free accepts NULL. Strings
 * returned through char** are owned by the caller (mdd_string_free).
 * Numeric buffers are row-major double or int32 arrays.
 */

#ifndef MDD_MDD_H_
#define MDD_MDD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MDD_BUILDING_LIBRARY)
#define MDD_API __attribute__((visibility("default")))
#else
#define MDD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mdd_status {
  MDD_OK = 0,
  MDD_ERR_RUNTIME = 1,
  MDD_ERR_VALIDATION = 2,
  MDD_ERR_ARGUMENT = 3,      /* NULL pointer or out-of-range argument */
  MDD_ERR_BUFFER_TOO_SMALL = 4
} mdd_status;

typedef struct mdd_config mdd_config;
typedef struct mdd_report mdd_report;
typedef struct mdd_alphabet mdd_alphabet;
typedef struct mdd_lm mdd_lm;
typedef struct mdd_model mdd_model;

MDD_API const char* mdd_version(void);
MDD_API const char* mdd_last_error(void);
MDD_API void mdd_string_free(char* s);

/* ---- configuration ------------------------------------------------------ */

MDD_API mdd_status mdd_config_new(mdd_config** out);
MDD_API mdd_status mdd_config_load(const char* path, mdd_config** out);
/* key is "section.name", e.g. "train.epochs". */
MDD_API mdd_status mdd_config_set(mdd_config* cfg, const char* key, const char* value);
MDD_API mdd_status mdd_config_get(const mdd_config* cfg, const char* key, char** out);
MDD_API mdd_status mdd_config_dump(const mdd_config* cfg, char** out);
MDD_API mdd_status mdd_config_validate(const mdd_config* cfg);
MDD_API void mdd_config_free(mdd_config* cfg);

/* ---- pipeline stages ---------------------------------------------------- */

typedef void (*mdd_progress_fn)(const char* line, void* user);

/* stage: "prepare", "features", "train-lm", "train", "decode", "evaluate". */
MDD_API mdd_status mdd_run_stage(const mdd_config* cfg, const char* stage, mdd_progress_fn progress, void* user,
                                 mdd_report** out);
MDD_API mdd_status mdd_run_augment_preview(const mdd_config* cfg, int limit, int epoch, mdd_report** out);

typedef struct mdd_synth_options {
  int train_utterances;
  int validation_utterances;
  int test_utterances;
  int min_phonemes;
  int max_phonemes;
  double mispronunciation_rate;
  uint64_t seed;
} mdd_synth_options;

MDD_API void mdd_synth_options_default(mdd_synth_options* opts);
MDD_API mdd_status mdd_synth_corpus(const char* root, const mdd_synth_options* opts, mdd_report** out);

MDD_API const char* mdd_report_summary(const mdd_report* r);
MDD_API int mdd_report_warning_count(const mdd_report* r);
MDD_API const char* mdd_report_message(const mdd_report* r, int index);
MDD_API void mdd_report_free(mdd_report* r);

/* ---- phoneme alphabet --------------------------------------------------- */

MDD_API mdd_status mdd_alphabet_default(mdd_alphabet** out);
MDD_API mdd_status mdd_alphabet_load(const char* path, mdd_alphabet** out);
MDD_API int mdd_alphabet_size(const mdd_alphabet* a);
/* Returns NULL for an out-of-range id. */
MDD_API const char* mdd_alphabet_symbol(const mdd_alphabet* a, int32_t id);
MDD_API mdd_status mdd_alphabet_lookup(const mdd_alphabet* a, const char* label, int32_t* id);
/* 0 vowel, 1 consonant, 2 silence. */
MDD_API mdd_status mdd_alphabet_classify(const mdd_alphabet* a, int32_t id, int* cls);
MDD_API void mdd_alphabet_free(mdd_alphabet* a);

/* ---- CTC ---------------------------------------------------------------- */

MDD_API mdd_status mdd_ctc_collapse(const int32_t* path, size_t n, int32_t blank, int32_t* out, size_t capacity,
                                    size_t* out_len);
/* logits: frames x classes raw scores, blank = classes - 1. grad may be NULL;
 * otherwise frames x classes. feasible receives 0 for impossible targets. */
MDD_API mdd_status mdd_ctc_loss(const double* logits, size_t frames, size_t classes, const int32_t* target,
                                size_t target_len, double* loss, double* grad, int* feasible);
MDD_API mdd_status mdd_greedy_decode(const double* log_probs, size_t frames, size_t classes, int32_t* out,
                                     size_t capacity, size_t* out_len);
/* lm may be NULL. score receives ctc + lm_weight * lm + insertion_bonus * len. */
MDD_API mdd_status mdd_beam_decode(const double* log_probs, size_t frames, size_t classes, int beam,
                                   const mdd_lm* lm, double lm_weight, double insertion_bonus, int32_t* out,
                                   size_t capacity, size_t* out_len, double* score);

/* ---- phone language model ----------------------------------------------- */

MDD_API mdd_status mdd_lm_train(const int32_t* const* sentences, const size_t* lengths, size_t count, int order,
                                const mdd_alphabet* alphabet, mdd_lm** out);
MDD_API mdd_status mdd_lm_load(const char* path, const mdd_alphabet* alphabet, mdd_lm** out);
MDD_API mdd_status mdd_lm_save(const mdd_lm* lm, const char* path);
/* log10 p(next | history); next == -1 asks for the sentence end. */
MDD_API mdd_status mdd_lm_score(const mdd_lm* lm, const int32_t* history, size_t history_len, int32_t next,
                                double* log10_prob);
MDD_API void mdd_lm_free(mdd_lm* lm);

/* ---- acoustic model ----------------------------------------------------- */

/* Trainable scalar count for the configuration's [model] section with the
 * given input width and phoneme vocabulary size. */
MDD_API mdd_status mdd_count_params(const mdd_config* cfg, int input_dim, int vocab_size, int64_t* out);
MDD_API mdd_status mdd_model_load(const char* checkpoint, mdd_model** out);
MDD_API mdd_status mdd_model_output_frames(const mdd_model* m, size_t frames, size_t* out);
MDD_API int mdd_model_output_dim(const mdd_model* m);
/* features: frames x input_dim. sentence is ignored by the baseline variant.
 * out: output_frames x output_dim log-probabilities (eval mode). */
MDD_API mdd_status mdd_model_log_probs(mdd_model* m, const double* features, size_t frames, size_t dim,
                                       const int32_t* sentence, size_t sentence_len, double* out, size_t capacity);
MDD_API void mdd_model_free(mdd_model* m);

/* ---- metrics ------------------------------------------------------------ */

typedef struct mdd_counts {
  int64_t ta, fr, fa, cd, de;
} mdd_counts;

typedef struct mdd_summary {
  /* Each rate is paired with a flag that is 0 when the rate is undefined. */
  double recall, precision, f_measure, ta_rate, fr_rate, fa_rate, cd_rate, de_rate;
  int has_recall, has_precision, has_f_measure, has_ta_rate, has_fr_rate, has_fa_rate, has_cd_rate, has_de_rate;
} mdd_summary;

MDD_API mdd_status mdd_edit_distance(const int32_t* ref, size_t ref_len, const int32_t* hyp, size_t hyp_len,
                                     int* distance);
MDD_API mdd_status mdd_per(const int32_t* ref, size_t ref_len, const int32_t* hyp, size_t hyp_len, double* per);
MDD_API mdd_status mdd_hierarchical_eval(const int32_t* canonical, size_t canonical_len, const int32_t* actual,
                                         size_t actual_len, const int32_t* recognized, size_t recognized_len,
                                         mdd_counts* out);
MDD_API mdd_status mdd_summarize(const mdd_counts* counts, mdd_summary* out);

#ifdef __cplusplus
}
#endif

#endif /* MDD_MDD_H_ */
