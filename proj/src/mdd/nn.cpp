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

#include "mdd/nn.hpp"

namespace mdd::nn {

Matrix ConvForward(const Matrix& x, int t_in, int f_in, const Matrix& weight, const Matrix& bias,
                   const ConvShape& shape, ConvCache* cache) {
  const int cin = shape.in_channels;
  if (x.rows() != static_cast<Eigen::Index>(t_in) * f_in || x.cols() != cin) {
    throw ValidationError("conv: input shape mismatch");
  }
  const int t_out = ConvOutLen(t_in, shape.stride_t);
  const int f_out = ConvOutLen(f_in, shape.stride_f);
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(t_out) * f_out, static_cast<Eigen::Index>(cin) * 9);
  for (int to = 0; to < t_out; ++to) {
    for (int kt = 0; kt < 3; ++kt) {
      const int ti = to * shape.stride_t + kt - 1;
      if (ti < 0 || ti >= t_in) continue;
      for (int fo = 0; fo < f_out; ++fo) {
        const Eigen::Index row = static_cast<Eigen::Index>(to) * f_out + fo;
        for (int kf = 0; kf < 3; ++kf) {
          const int fi = fo * shape.stride_f + kf - 1;
          if (fi < 0 || fi >= f_in) continue;
          const Eigen::Index src = static_cast<Eigen::Index>(ti) * f_in + fi;
          for (int ci = 0; ci < cin; ++ci) cols(row, ci * 9 + kt * 3 + kf) = x(src, ci);
        }
      }
    }
  }
  Matrix y = cols * weight.transpose();
  y.rowwise() += bias.row(0);
  if (cache) {
    cache->cols = std::move(cols);
    cache->t_in = t_in;
    cache->f_in = f_in;
    cache->t_out = t_out;
    cache->f_out = f_out;
  }
  return y;
}

Matrix ConvBackward(const Matrix& dy, const ConvCache& cache, const Matrix& weight, const ConvShape& shape,
                    Matrix* dweight, Matrix* dbias) {
  if (dweight) *dweight += dy.transpose() * cache.cols;
  if (dbias) *dbias += dy.colwise().sum();
  const Matrix dcols = dy * weight;
  const int cin = shape.in_channels;
  Matrix dx = Matrix::Zero(static_cast<Eigen::Index>(cache.t_in) * cache.f_in, cin);
  for (int to = 0; to < cache.t_out; ++to) {
    for (int kt = 0; kt < 3; ++kt) {
      const int ti = to * shape.stride_t + kt - 1;
      if (ti < 0 || ti >= cache.t_in) continue;
      for (int fo = 0; fo < cache.f_out; ++fo) {
        const Eigen::Index row = static_cast<Eigen::Index>(to) * cache.f_out + fo;
        for (int kf = 0; kf < 3; ++kf) {
          const int fi = fo * shape.stride_f + kf - 1;
          if (fi < 0 || fi >= cache.f_in) continue;
          const Eigen::Index dst = static_cast<Eigen::Index>(ti) * cache.f_in + fi;
          for (int ci = 0; ci < cin; ++ci) dx(dst, ci) += dcols(row, ci * 9 + kt * 3 + kf);
        }
      }
    }
  }
  return dx;
}

Matrix BatchNormForward(const Matrix& x, const Matrix& gamma, const Matrix& beta, Matrix* running_mean,
                        Matrix* running_var, bool train, double momentum, double eps, BatchNormCache* cache) {
  const Eigen::Index n = x.rows();
  RowVector mean, var;
  if (train) {
    if (n < 1) throw ValidationError("batch norm: empty batch");
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean();
    if (running_mean && running_var) {
      const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
      running_mean->row(0) = (1.0 - momentum) * running_mean->row(0) + momentum * mean;
      running_var->row(0) = (1.0 - momentum) * running_var->row(0) + momentum * unbias * var;
    }
  } else {
    mean = running_mean->row(0);
    var = running_var->row(0);
  }
  RowVector inv_std = (var.array() + eps).rsqrt();
  Matrix xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
    cache->train = train;
  }
  return y;
}

Matrix BatchNormBackward(const Matrix& dy, const BatchNormCache& cache, const Matrix& gamma, Matrix* dgamma,
                         Matrix* dbeta) {
  if (dgamma) *dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  if (dbeta) *dbeta += dy.colwise().sum();
  RowVector scale = gamma.row(0).array() * cache.inv_std.array();
  if (!cache.train) return dy.array().rowwise() * scale.array();
  const auto n = static_cast<double>(dy.rows());
  RowVector mean_dy = dy.colwise().sum() / n;
  RowVector mean_dy_xhat = (dy.array() * cache.xhat.array()).colwise().sum().matrix() / n;
  Matrix centered = dy.rowwise() - mean_dy;
  centered.array() -= cache.xhat.array().rowwise() * mean_dy_xhat.array();
  return centered.array().rowwise() * scale.array();
}

namespace {

inline double Sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Matrix LstmForward(const Matrix& x, const LstmParams& p, bool reverse, LstmCache* cache) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index h = p.w_hh->cols();
  if (x.cols() != p.w_ih->cols()) throw ValidationError("lstm: input width mismatch");
  Matrix gates_in = x * p.w_ih->transpose();
  if (p.b_ih) gates_in.rowwise() += p.b_ih->row(0);
  if (p.b_hh) gates_in.rowwise() += p.b_hh->row(0);

  LstmCache local;
  LstmCache& c = cache ? *cache : local;
  c.x = x;
  c.reverse = reverse;
  c.i.resize(t_len, h);
  c.f.resize(t_len, h);
  c.g.resize(t_len, h);
  c.o.resize(t_len, h);
  c.c.resize(t_len, h);
  c.tanh_c.resize(t_len, h);
  c.h.resize(t_len, h);

  Matrix out(t_len, h);
  RowVector h_prev = RowVector::Zero(h);
  RowVector c_prev = RowVector::Zero(h);
  for (Eigen::Index k = 0; k < t_len; ++k) {
    const Eigen::Index t = reverse ? t_len - 1 - k : k;
    RowVector z = gates_in.row(t) + h_prev * p.w_hh->transpose();
    for (Eigen::Index j = 0; j < h; ++j) {
      c.i(k, j) = Sigmoid(z[j]);
      c.f(k, j) = Sigmoid(z[h + j]);
      c.g(k, j) = std::tanh(z[2 * h + j]);
      c.o(k, j) = Sigmoid(z[3 * h + j]);
      c.c(k, j) = c.f(k, j) * c_prev[j] + c.i(k, j) * c.g(k, j);
      c.tanh_c(k, j) = std::tanh(c.c(k, j));
      c.h(k, j) = c.o(k, j) * c.tanh_c(k, j);
    }
    h_prev = c.h.row(k);
    c_prev = c.c.row(k);
    out.row(t) = h_prev;
  }
  return out;
}

Matrix LstmBackward(const Matrix& dh, const LstmCache& c, const LstmParams& p, const LstmGrads& g) {
  const Eigen::Index t_len = c.x.rows();
  const Eigen::Index h = p.w_hh->cols();
  Matrix dgates(t_len, 4 * h);
  RowVector dh_next = RowVector::Zero(h);
  RowVector dc_next = RowVector::Zero(h);
  Matrix dw_hh = Matrix::Zero(4 * h, h);
  RowVector dz(4 * h);
  for (Eigen::Index k = t_len - 1; k >= 0; --k) {
    const Eigen::Index t = c.reverse ? t_len - 1 - k : k;
    RowVector dh_k = dh.row(t) + dh_next;
    for (Eigen::Index j = 0; j < h; ++j) {
      const double c_prev = k > 0 ? c.c(k - 1, j) : 0.0;
      const double i = c.i(k, j), f = c.f(k, j), gg = c.g(k, j), o = c.o(k, j), tc = c.tanh_c(k, j);
      const double d_o = dh_k[j] * tc;
      const double dc = dc_next[j] + dh_k[j] * o * (1.0 - tc * tc);
      dz[j] = dc * gg * i * (1.0 - i);
      dz[h + j] = dc * c_prev * f * (1.0 - f);
      dz[2 * h + j] = dc * i * (1.0 - gg * gg);
      dz[3 * h + j] = d_o * o * (1.0 - o);
      dc_next[j] = dc * f;
    }
    if (k > 0) dw_hh += dz.transpose() * c.h.row(k - 1);
    dh_next = dz * *p.w_hh;
    dgates.row(t) = dz;
  }
  if (g.w_hh) *g.w_hh += dw_hh;
  if (g.w_ih) *g.w_ih += dgates.transpose() * c.x;
  if (g.b_ih) *g.b_ih += dgates.colwise().sum();
  if (g.b_hh) *g.b_hh += dgates.colwise().sum();
  return dgates * *p.w_ih;
}

Matrix SoftmaxRows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    RowVector e = (x.row(r).array() - m).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

Matrix AttendFromScores(const Matrix& scores, const Matrix& values, Matrix* weights) {
  Matrix w = SoftmaxRows(scores);
  Matrix ctx = w * values;
  if (weights) *weights = std::move(w);
  return ctx;
}

Matrix AttentionForward(const Matrix& q, const Matrix& k, const Matrix& v, AttentionCache* cache) {
  if (q.cols() != k.cols()) throw ValidationError("attention: query/key width mismatch");
  if (k.rows() != v.rows()) throw ValidationError("attention: key/value count mismatch");
  if (k.rows() == 0) throw ValidationError("attention: empty key sequence");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix weights;
  Matrix ctx = AttendFromScores(scale * (q * k.transpose()), v, &weights);
  if (cache) {
    cache->q = q;
    cache->k = k;
    cache->v = v;
    cache->weights = std::move(weights);
    cache->scale = scale;
  }
  return ctx;
}

void AttentionBackward(const Matrix& dcontext, const AttentionCache& c, Matrix* dq, Matrix* dk, Matrix* dv) {
  const Matrix dweights = dcontext * c.v.transpose();
  if (dv) *dv += c.weights.transpose() * dcontext;
  Vector row_dot = (dweights.array() * c.weights.array()).rowwise().sum();
  Matrix dscores = c.weights.array() * (dweights.colwise() - row_dot).array();
  dscores *= c.scale;
  if (dq) *dq += dscores * c.k;
  if (dk) *dk += dscores.transpose() * c.q;
}

Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  Matrix mask(rows, cols);
  if (p <= 0.0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
  return mask;
}

}  // namespace mdd::nn
