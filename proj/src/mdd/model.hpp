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

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mdd/common.hpp"
#include "mdd/nn.hpp"

namespace mdd {

enum class ModelVariant { kBaselineCtc, kAttention };

const char* VariantName(ModelVariant v);
ModelVariant ParseVariant(const std::string& name);

/// Audio encoder: two 3x3 convolutions (strides (1,2) then (2,2)), each
/// followed by batch norm, ReLU and dropout; then bidirectional LSTM layers
/// without bias, batch norm before every layer but the first. The attention
/// variant adds embedding -> biased BiLSTM (values) -> linear (keys) and
/// classifies [context; query] through batch norm and a bias-free linear.
struct ModelConfig {
  ModelVariant variant = ModelVariant::kAttention;
  int input_dim = 243;
  int conv_channels = 32;
  int rnn_layers = 4;
  int rnn_hidden = 384;
  int embed_dim = 512;
  int vocab_size = 42;  // phonemes, excluding blank
  double dropout = 0.2;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  int freq_after_conv1() const { return nn::ConvOutLen(input_dim, 2); }
  int freq_after_conv() const { return nn::ConvOutLen(freq_after_conv1(), 2); }
  int rnn_input_dim() const { return conv_channels * freq_after_conv(); }
  int encoder_dim() const { return 2 * rnn_hidden; }
  int classifier_input_dim() const {
    return variant == ModelVariant::kAttention ? 2 * encoder_dim() : encoder_dim();
  }
  int output_dim() const { return vocab_size + 1; }

  /// Frames after the time-strided convolution: floor((T-1)/2)+1.
  static int DownsampledLength(int frames) { return nn::ConvOutLen(frames, 2); }

  void Validate() const;
  std::string Serialize() const;
  static ModelConfig Parse(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

/// Trainable scalar count implied by a configuration.
std::int64_t CountParams(const ModelConfig& cfg);

/// Named tensors; iteration order is the sorted name order.
struct ParamStore {
  std::map<std::string, Matrix> tensors;

  Matrix& operator[](const std::string& name) { return tensors.at(name); }
  const Matrix& operator[](const std::string& name) const { return tensors.at(name); }
  std::int64_t NumScalars() const;
  ParamStore ZerosLike() const;
  double SquaredNorm() const;
  void Scale(double s);
  void Add(const ParamStore& other, double s = 1.0);
  bool AllFinite() const;
};

enum class Mode { kTrain, kEval };

struct UtteranceInput {
  const Matrix* features = nullptr;              // T x input_dim
  const std::vector<PhonemeId>* sentence = nullptr;  // canonical phonemes; unused by the baseline
};

/// Per-utterance views of a forward pass.
struct ForwardTrace {
  Matrix h_query;   // T' x 2H
  Matrix h_value;   // N x 2H
  Matrix h_key;     // N x 2H
  Matrix attention; // T' x N
  Matrix context;   // T' x 2H
  Matrix logits;    // T' x (V+1)
  Matrix log_probs; // T' x (V+1)
};

struct BatchCache;

struct LossResult {
  double loss = 0.0;  // summed over feasible utterances
  std::vector<double> per_utterance;  // +inf for skipped utterances
  std::vector<bool> skipped;
  int feasible = 0;
};

class AcousticModel {
 public:
  AcousticModel() = default;
  /// Glorot-uniform matrices, zero biases and BN shifts, unit BN scales,
  /// N(0, 0.1) embeddings, all drawn from `seed`.
  AcousticModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  ParamStore& buffers() { return buffers_; }
  const ParamStore& buffers() const { return buffers_; }

  /// Forward over a batch; batch norm statistics span the whole batch in
  /// train mode. `rng` drives dropout and may be null in eval mode.
  std::vector<ForwardTrace> Forward(const std::vector<UtteranceInput>& batch, Mode mode, std::mt19937_64* rng,
                                    BatchCache* cache = nullptr);

  /// Gradient of sum_b <dlogits_b, logits_b> with respect to every parameter.
  ParamStore Backward(const BatchCache& cache, const std::vector<Matrix>& dlogits) const;

  /// Summed CTC loss against `targets` and its gradient. Utterances whose
  /// target cannot fit in T' frames are skipped and flagged.
  LossResult LossAndGrad(const std::vector<UtteranceInput>& batch,
                         const std::vector<std::vector<PhonemeId>>& targets, Mode mode, std::mt19937_64* rng,
                         ParamStore* grads);

  /// Eval-mode per-frame log-probabilities for one utterance.
  Matrix LogProbs(const Matrix& features, const std::vector<PhonemeId>& sentence);

  void SaveCheckpoint(const std::string& path) const;
  static AcousticModel LoadCheckpoint(const std::string& path);
  std::string SerializeCheckpoint() const;
  static AcousticModel ParseCheckpoint(const std::string& bytes);

 private:
  ModelConfig cfg_;
  ParamStore params_;
  ParamStore buffers_;  // batch-norm running statistics
};

/// Cached intermediates of a batched forward pass.
struct BatchCache {
  struct Utt {
    int frames = 0;       // T
    int frames_out = 0;   // T'
    int tokens = 0;       // N
    nn::ConvCache conv1, conv2;
    std::vector<nn::LstmCache> rnn_fwd, rnn_bwd;
    std::vector<PhonemeId> sentence;
    nn::LstmCache sent_fwd, sent_bwd;
    Matrix h_value;
    nn::AttentionCache attention;
  };
  Mode mode = Mode::kEval;
  std::vector<Utt> utts;
  nn::BatchNormCache bn_conv1, bn_conv2, bn_out;
  Matrix z_norm;  // classifier input after batch norm
  Matrix relu1, relu2;  // post-activation (pre-dropout) outputs
  Matrix drop_conv1, drop_conv2;
  std::vector<nn::BatchNormCache> bn_rnn;  // index l-1 for layer l >= 1
  std::vector<Matrix> drop_rnn;
  std::vector<Eigen::Index> conv1_rows, conv2_rows, frame_rows;  // row offsets per utterance
};

}  // namespace mdd
