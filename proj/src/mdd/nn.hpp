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

// Layer primitives with explicit forward caches and analytic backward
// passes. Activations are row-major matrices: one row per frame (or per
// spatial position for convolutions), one column per feature/channel.

#pragma once

#include <random>

#include "mdd/common.hpp"

namespace mdd::nn {

// ---------------------------------------------------------------------------
// 3x3 convolution, padding 1, over a single-utterance (time, freq) plane.
// Input x is (T*F) x C_in with row index t*F + f. Weights are
// C_out x (C_in*9) flattened as [ci][kt][kf], bias 1 x C_out.

struct ConvShape {
  int in_channels = 1;
  int out_channels = 1;
  int stride_t = 1;
  int stride_f = 1;
};

inline int ConvOutLen(int n, int stride) { return (n - 1) / stride + 1; }

struct ConvCache {
  Matrix cols;
  int t_in = 0, f_in = 0, t_out = 0, f_out = 0;
};

Matrix ConvForward(const Matrix& x, int t_in, int f_in, const Matrix& weight, const Matrix& bias,
                   const ConvShape& shape, ConvCache* cache);
Matrix ConvBackward(const Matrix& dy, const ConvCache& cache, const Matrix& weight, const ConvShape& shape,
                    Matrix* dweight, Matrix* dbias);

// ---------------------------------------------------------------------------
// Batch normalization over rows, one statistic per column. Train mode uses
// the batch's biased variance and updates running stats (unbiased variance);
// eval mode uses the running stats.

struct BatchNormCache {
  Matrix xhat;
  RowVector inv_std;
  bool train = true;
};

Matrix BatchNormForward(const Matrix& x, const Matrix& gamma, const Matrix& beta, Matrix* running_mean,
                        Matrix* running_var, bool train, double momentum, double eps, BatchNormCache* cache);
Matrix BatchNormBackward(const Matrix& dy, const BatchNormCache& cache, const Matrix& gamma, Matrix* dgamma,
                         Matrix* dbeta);

// ---------------------------------------------------------------------------
// Single-direction LSTM, gate order (input, forget, cell, output).

struct LstmParams {
  const Matrix* w_ih = nullptr;  // 4H x In
  const Matrix* w_hh = nullptr;  // 4H x H
  const Matrix* b_ih = nullptr;  // 1 x 4H, optional
  const Matrix* b_hh = nullptr;  // 1 x 4H, optional
};

struct LstmGrads {
  Matrix* w_ih = nullptr;
  Matrix* w_hh = nullptr;
  Matrix* b_ih = nullptr;
  Matrix* b_hh = nullptr;
};

struct LstmCache {
  Matrix x;
  Matrix i, f, g, o, c, tanh_c, h;  // T x H, in processing order
  bool reverse = false;
};

/// Returns T x H hidden states in input time order. With reverse set the
/// recurrence runs from the last frame to the first.
Matrix LstmForward(const Matrix& x, const LstmParams& p, bool reverse, LstmCache* cache);
Matrix LstmBackward(const Matrix& dh, const LstmCache& cache, const LstmParams& p, const LstmGrads& g);

// ---------------------------------------------------------------------------
// Scaled dot-product attention of each query row over key/value rows.

struct AttentionCache {
  Matrix q, k, v, weights;
  double scale = 1.0;
};

/// Row-wise softmax of `scores` applied to `values`.
Matrix AttendFromScores(const Matrix& scores, const Matrix& values, Matrix* weights);

/// weights = softmax(q k^T / sqrt(d)) over keys; returns weights * v.
Matrix AttentionForward(const Matrix& q, const Matrix& k, const Matrix& v, AttentionCache* cache);
void AttentionBackward(const Matrix& dcontext, const AttentionCache& cache, Matrix* dq, Matrix* dk, Matrix* dv);

// ---------------------------------------------------------------------------

/// Inverted dropout mask: entries are 0 or 1/(1-p).
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng);

Matrix SoftmaxRows(const Matrix& x);

}  // namespace mdd::nn
