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

#include "mdd/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mdd/ctc.hpp"

namespace mdd {

const char* VariantName(ModelVariant v) {
  return v == ModelVariant::kAttention ? "attention" : "baseline_ctc";
}

ModelVariant ParseVariant(const std::string& name) {
  if (name == "attention") return ModelVariant::kAttention;
  if (name == "baseline_ctc" || name == "baseline") return ModelVariant::kBaselineCtc;
  throw ValidationError("unknown model variant '" + name + "' (expected attention or baseline_ctc)");
}

void ModelConfig::Validate() const {
  if (input_dim < 1 || conv_channels < 1 || rnn_layers < 1 || rnn_hidden < 1 || embed_dim < 1 || vocab_size < 1) {
    throw ValidationError("model config: dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("model config: dropout must be in [0, 1)");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ValidationError("model config: bn_momentum must be in [0, 1]");
  if (!(bn_eps > 0.0)) throw ValidationError("model config: bn_eps must be positive");
}

std::string ModelConfig::Serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "variant=" << VariantName(variant) << '\n'
     << "input_dim=" << input_dim << '\n'
     << "conv_channels=" << conv_channels << '\n'
     << "rnn_layers=" << rnn_layers << '\n'
     << "rnn_hidden=" << rnn_hidden << '\n'
     << "embed_dim=" << embed_dim << '\n'
     << "vocab_size=" << vocab_size << '\n'
     << "dropout=" << dropout << '\n'
     << "bn_momentum=" << bn_momentum << '\n'
     << "bn_eps=" << bn_eps << '\n';
  return os.str();
}

ModelConfig ModelConfig::Parse(const std::string& text) {
  ModelConfig c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("model config: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    try {
      if (key == "variant") c.variant = ParseVariant(val);
      else if (key == "input_dim") c.input_dim = std::stoi(val);
      else if (key == "conv_channels") c.conv_channels = std::stoi(val);
      else if (key == "rnn_layers") c.rnn_layers = std::stoi(val);
      else if (key == "rnn_hidden") c.rnn_hidden = std::stoi(val);
      else if (key == "embed_dim") c.embed_dim = std::stoi(val);
      else if (key == "vocab_size") c.vocab_size = std::stoi(val);
      else if (key == "dropout") c.dropout = std::stod(val);
      else if (key == "bn_momentum") c.bn_momentum = std::stod(val);
      else if (key == "bn_eps") c.bn_eps = std::stod(val);
      else throw ValidationError("model config: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw ValidationError("model config: bad value for '" + key + "'");
    }
  }
  c.Validate();
  return c;
}

// ---------------------------------------------------------------------------

std::int64_t ParamStore::NumScalars() const {
  std::int64_t n = 0;
  for (const auto& [name, m] : tensors) n += m.size();
  return n;
}

ParamStore ParamStore::ZerosLike() const {
  ParamStore out;
  for (const auto& [name, m] : tensors) out.tensors.emplace(name, Matrix::Zero(m.rows(), m.cols()));
  return out;
}

double ParamStore::SquaredNorm() const {
  double s = 0.0;
  for (const auto& [name, m] : tensors) s += m.squaredNorm();
  return s;
}

void ParamStore::Scale(double s) {
  for (auto& [name, m] : tensors) m *= s;
}

void ParamStore::Add(const ParamStore& other, double s) {
  for (auto& [name, m] : tensors) m += s * other[name];
}

bool ParamStore::AllFinite() const {
  for (const auto& [name, m] : tensors) {
    if (!m.allFinite()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

struct Shape {
  Eigen::Index rows, cols;
};

std::string RnnName(int layer, bool reverse, const char* what) {
  return "rnn.l" + std::to_string(layer) + (reverse ? ".bwd." : ".fwd.") + what;
}

std::string RnnBnName(int layer, const char* what) { return "rnn.bn" + std::to_string(layer) + "." + what; }

std::string SentName(bool reverse, const char* what) { return std::string(reverse ? "sent.bwd." : "sent.fwd.") + what; }

std::map<std::string, Shape> ParamShapes(const ModelConfig& c) {
  std::map<std::string, Shape> s;
  const Eigen::Index ch = c.conv_channels, h = c.rnn_hidden, e2 = c.encoder_dim();
  s["conv1.weight"] = {ch, 9};
  s["conv1.bias"] = {1, ch};
  s["bn_conv1.weight"] = {1, ch};
  s["bn_conv1.bias"] = {1, ch};
  s["conv2.weight"] = {ch, ch * 9};
  s["conv2.bias"] = {1, ch};
  s["bn_conv2.weight"] = {1, ch};
  s["bn_conv2.bias"] = {1, ch};
  for (int l = 0; l < c.rnn_layers; ++l) {
    const Eigen::Index in = l == 0 ? c.rnn_input_dim() : e2;
    for (bool rev : {false, true}) {
      s[RnnName(l, rev, "w_ih")] = {4 * h, in};
      s[RnnName(l, rev, "w_hh")] = {4 * h, h};
    }
    if (l > 0) {
      s[RnnBnName(l, "weight")] = {1, e2};
      s[RnnBnName(l, "bias")] = {1, e2};
    }
  }
  if (c.variant == ModelVariant::kAttention) {
    s["embed.weight"] = {c.vocab_size, c.embed_dim};
    for (bool rev : {false, true}) {
      s[SentName(rev, "w_ih")] = {4 * h, c.embed_dim};
      s[SentName(rev, "w_hh")] = {4 * h, h};
      s[SentName(rev, "b_ih")] = {1, 4 * h};
      s[SentName(rev, "b_hh")] = {1, 4 * h};
    }
    s["key.weight"] = {e2, e2};
  }
  s["bn_out.weight"] = {1, c.classifier_input_dim()};
  s["bn_out.bias"] = {1, c.classifier_input_dim()};
  s["out.weight"] = {c.output_dim(), c.classifier_input_dim()};
  return s;
}

std::vector<std::string> BatchNormNames(const ModelConfig& c) {
  std::vector<std::string> names = {"bn_conv1", "bn_conv2", "bn_out"};
  for (int l = 1; l < c.rnn_layers; ++l) names.push_back("rnn.bn" + std::to_string(l));
  return names;
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Matrix Rows(const Matrix& m, Eigen::Index start, Eigen::Index n) { return m.middleRows(start, n); }

Matrix Relu(Matrix x) {
  x = x.cwiseMax(0.0);
  return x;
}

}  // namespace

std::int64_t CountParams(const ModelConfig& cfg) {
  std::int64_t n = 0;
  for (const auto& [name, s] : ParamShapes(cfg)) n += static_cast<std::int64_t>(s.rows) * s.cols;
  return n;
}

AcousticModel::AcousticModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.Validate();
  std::mt19937_64 rng(seed);
  for (const auto& [name, s] : ParamShapes(cfg_)) {
    Matrix m(s.rows, s.cols);
    if (name == "embed.weight") {
      std::normal_distribution<double> normal(0.0, 0.1);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    } else if (name.rfind("bn", 0) == 0 || name.find(".bn") != std::string::npos) {
      m.setConstant(EndsWith(name, ".weight") ? 1.0 : 0.0);
    } else if (EndsWith(name, "bias") || name.find(".b_") != std::string::npos) {
      m.setZero();
    } else {
      double fan_in = static_cast<double>(s.cols), fan_out = static_cast<double>(s.rows);
      if (name.rfind("conv", 0) == 0) fan_out *= 9.0;
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> uni(-limit, limit);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uni(rng);
    }
    params_.tensors.emplace(name, std::move(m));
  }
  for (const auto& bn : BatchNormNames(cfg_)) {
    const Eigen::Index d = params_[bn + ".weight"].cols();
    buffers_.tensors.emplace(bn + ".running_mean", Matrix::Zero(1, d));
    buffers_.tensors.emplace(bn + ".running_var", Matrix::Ones(1, d));
  }
}

// ---------------------------------------------------------------------------

std::vector<ForwardTrace> AcousticModel::Forward(const std::vector<UtteranceInput>& batch, Mode mode,
                                                 std::mt19937_64* rng, BatchCache* cache) {
  if (batch.empty()) throw ValidationError("forward: empty batch");
  const bool train = mode == Mode::kTrain;
  const bool drop = train && cfg_.dropout > 0.0;
  if (drop && !rng) throw ValidationError("forward: dropout needs a random generator");
  const bool attn = cfg_.variant == ModelVariant::kAttention;
  const int f0 = cfg_.input_dim, f1 = cfg_.freq_after_conv1(), f2 = cfg_.freq_after_conv();
  const int ch = cfg_.conv_channels, e2 = cfg_.encoder_dim();

  BatchCache local;
  BatchCache& bc = cache ? *cache : local;
  bc = BatchCache{};
  bc.mode = mode;
  bc.utts.resize(batch.size());

  auto bn = [&](const std::string& name, const Matrix& x, nn::BatchNormCache* c) {
    return nn::BatchNormForward(x, params_[name + ".weight"], params_[name + ".bias"],
                                &buffers_[name + ".running_mean"], &buffers_[name + ".running_var"], train,
                                cfg_.bn_momentum, cfg_.bn_eps, c);
  };
  auto dropout = [&](Matrix& x, Matrix* mask) {
    if (!drop) return;
    *mask = nn::DropoutMask(x.rows(), x.cols(), cfg_.dropout, *rng);
    x.array() *= mask->array();
  };

  // Convolution stack.
  Eigen::Index rows1 = 0, rows2 = 0, frames_total = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Matrix& feat = *batch[b].features;
    if (feat.rows() < 1) throw ValidationError("forward: utterance has no frames");
    if (feat.cols() != f0) {
      throw ValidationError("forward: feature width " + std::to_string(feat.cols()) + " != " + std::to_string(f0));
    }
    if (!feat.allFinite()) throw ValidationError("forward: non-finite input features");
    auto& u = bc.utts[b];
    u.frames = static_cast<int>(feat.rows());
    u.frames_out = ModelConfig::DownsampledLength(u.frames);
    bc.conv1_rows.push_back(rows1);
    bc.conv2_rows.push_back(rows2);
    bc.frame_rows.push_back(frames_total);
    rows1 += static_cast<Eigen::Index>(u.frames) * f1;
    rows2 += static_cast<Eigen::Index>(u.frames_out) * f2;
    frames_total += u.frames_out;
  }
  const nn::ConvShape shape1{1, ch, 1, 2}, shape2{ch, ch, 2, 2};
  Matrix y1(rows1, ch);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Matrix& feat = *batch[b].features;
    const Matrix x = Eigen::Map<const Matrix>(feat.data(), feat.rows() * f0, 1);
    auto& u = bc.utts[b];
    y1.middleRows(bc.conv1_rows[b], static_cast<Eigen::Index>(u.frames) * f1) =
        nn::ConvForward(x, u.frames, f0, params_["conv1.weight"], params_["conv1.bias"], shape1, &u.conv1);
  }
  bc.relu1 = Relu(bn("bn_conv1", y1, &bc.bn_conv1));
  Matrix a1 = bc.relu1;
  dropout(a1, &bc.drop_conv1);

  Matrix y2(rows2, ch);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto& u = bc.utts[b];
    const Matrix x = Rows(a1, bc.conv1_rows[b], static_cast<Eigen::Index>(u.frames) * f1);
    y2.middleRows(bc.conv2_rows[b], static_cast<Eigen::Index>(u.frames_out) * f2) =
        nn::ConvForward(x, u.frames, f1, params_["conv2.weight"], params_["conv2.bias"], shape2, &u.conv2);
  }
  bc.relu2 = Relu(bn("bn_conv2", y2, &bc.bn_conv2));
  Matrix a2 = bc.relu2;
  dropout(a2, &bc.drop_conv2);

  // Flatten each output frame to channel-major [c * F2 + f].
  Matrix h(frames_total, static_cast<Eigen::Index>(ch) * f2);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& u = bc.utts[b];
    for (int t = 0; t < u.frames_out; ++t) {
      for (int f = 0; f < f2; ++f) {
        const Eigen::Index src = bc.conv2_rows[b] + static_cast<Eigen::Index>(t) * f2 + f;
        for (int c = 0; c < ch; ++c) h(bc.frame_rows[b] + t, c * f2 + f) = a2(src, c);
      }
    }
  }

  // Bidirectional LSTM stack.
  bc.bn_rnn.resize(static_cast<std::size_t>(cfg_.rnn_layers > 0 ? cfg_.rnn_layers - 1 : 0));
  bc.drop_rnn.resize(static_cast<std::size_t>(cfg_.rnn_layers));
  for (auto& u : bc.utts) {
    u.rnn_fwd.resize(static_cast<std::size_t>(cfg_.rnn_layers));
    u.rnn_bwd.resize(static_cast<std::size_t>(cfg_.rnn_layers));
  }
  for (int l = 0; l < cfg_.rnn_layers; ++l) {
    if (l > 0) h = bn("rnn.bn" + std::to_string(l), h, &bc.bn_rnn[static_cast<std::size_t>(l - 1)]);
    Matrix out(frames_total, e2);
    const nn::LstmParams pf{&params_[RnnName(l, false, "w_ih")], &params_[RnnName(l, false, "w_hh")], nullptr, nullptr};
    const nn::LstmParams pb{&params_[RnnName(l, true, "w_ih")], &params_[RnnName(l, true, "w_hh")], nullptr, nullptr};
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto& u = bc.utts[b];
      const Matrix x = Rows(h, bc.frame_rows[b], u.frames_out);
      out.block(bc.frame_rows[b], 0, u.frames_out, cfg_.rnn_hidden) =
          nn::LstmForward(x, pf, false, &u.rnn_fwd[static_cast<std::size_t>(l)]);
      out.block(bc.frame_rows[b], cfg_.rnn_hidden, u.frames_out, cfg_.rnn_hidden) =
          nn::LstmForward(x, pb, true, &u.rnn_bwd[static_cast<std::size_t>(l)]);
    }
    dropout(out, &bc.drop_rnn[static_cast<std::size_t>(l)]);
    h = std::move(out);
  }

  std::vector<ForwardTrace> traces(batch.size());
  Matrix z(frames_total, cfg_.classifier_input_dim());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    auto& u = bc.utts[b];
    auto& tr = traces[b];
    tr.h_query = Rows(h, bc.frame_rows[b], u.frames_out);
    if (!attn) {
      z.middleRows(bc.frame_rows[b], u.frames_out) = tr.h_query;
      continue;
    }
    if (!batch[b].sentence || batch[b].sentence->empty()) {
      throw ValidationError("forward: attention variant needs a non-empty canonical sentence");
    }
    u.sentence = *batch[b].sentence;
    u.tokens = static_cast<int>(u.sentence.size());
    const Matrix& embed = params_["embed.weight"];
    Matrix emb(u.tokens, cfg_.embed_dim);
    for (int n = 0; n < u.tokens; ++n) {
      const PhonemeId id = u.sentence[static_cast<std::size_t>(n)];
      if (id < 0 || id >= cfg_.vocab_size) throw ValidationError("forward: sentence id out of range");
      emb.row(n) = embed.row(id);
    }
    const nn::LstmParams sf{&params_[SentName(false, "w_ih")], &params_[SentName(false, "w_hh")],
                            &params_[SentName(false, "b_ih")], &params_[SentName(false, "b_hh")]};
    const nn::LstmParams sb{&params_[SentName(true, "w_ih")], &params_[SentName(true, "w_hh")],
                            &params_[SentName(true, "b_ih")], &params_[SentName(true, "b_hh")]};
    tr.h_value.resize(u.tokens, e2);
    tr.h_value.leftCols(cfg_.rnn_hidden) = nn::LstmForward(emb, sf, false, &u.sent_fwd);
    tr.h_value.rightCols(cfg_.rnn_hidden) = nn::LstmForward(emb, sb, true, &u.sent_bwd);
    tr.h_key = tr.h_value * params_["key.weight"].transpose();
    tr.context = nn::AttentionForward(tr.h_query, tr.h_key, tr.h_value, &u.attention);
    tr.attention = u.attention.weights;
    u.h_value = tr.h_value;
    z.block(bc.frame_rows[b], 0, u.frames_out, e2) = tr.context;
    z.block(bc.frame_rows[b], e2, u.frames_out, e2) = tr.h_query;
  }

  bc.z_norm = bn("bn_out", z, &bc.bn_out);
  const Matrix logits = bc.z_norm * params_["out.weight"].transpose();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    traces[b].logits = Rows(logits, bc.frame_rows[b], bc.utts[b].frames_out);
    traces[b].log_probs = LogSoftmaxRows(traces[b].logits);
  }
  return traces;
}

ParamStore AcousticModel::Backward(const BatchCache& bc, const std::vector<Matrix>& dlogits) const {
  if (dlogits.size() != bc.utts.size()) throw ValidationError("backward: gradient count mismatch");
  const bool attn = cfg_.variant == ModelVariant::kAttention;
  const int f1 = cfg_.freq_after_conv1(), f2 = cfg_.freq_after_conv();
  const int ch = cfg_.conv_channels, e2 = cfg_.encoder_dim(), hid = cfg_.rnn_hidden;
  const std::size_t nb = bc.utts.size();
  ParamStore g = params_.ZerosLike();

  Eigen::Index frames_total = 0;
  for (const auto& u : bc.utts) frames_total += u.frames_out;
  Matrix dl(frames_total, cfg_.output_dim());
  for (std::size_t b = 0; b < nb; ++b) dl.middleRows(bc.frame_rows[b], bc.utts[b].frames_out) = dlogits[b];

  g["out.weight"] += dl.transpose() * bc.z_norm;
  const Matrix dzn = dl * params_["out.weight"];
  const Matrix dz = nn::BatchNormBackward(dzn, bc.bn_out, params_["bn_out.weight"], &g["bn_out.weight"],
                                          &g["bn_out.bias"]);

  Matrix dh(frames_total, e2);
  if (!attn) {
    dh = dz;
  } else {
    const nn::LstmParams sf{&params_[SentName(false, "w_ih")], &params_[SentName(false, "w_hh")],
                            &params_[SentName(false, "b_ih")], &params_[SentName(false, "b_hh")]};
    const nn::LstmParams sb{&params_[SentName(true, "w_ih")], &params_[SentName(true, "w_hh")],
                            &params_[SentName(true, "b_ih")], &params_[SentName(true, "b_hh")]};
    const nn::LstmGrads gf{&g[SentName(false, "w_ih")], &g[SentName(false, "w_hh")], &g[SentName(false, "b_ih")],
                           &g[SentName(false, "b_hh")]};
    const nn::LstmGrads gb{&g[SentName(true, "w_ih")], &g[SentName(true, "w_hh")], &g[SentName(true, "b_ih")],
                           &g[SentName(true, "b_hh")]};
    const Matrix& wk = params_["key.weight"];
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& u = bc.utts[b];
      const Matrix dctx = dz.block(bc.frame_rows[b], 0, u.frames_out, e2);
      Matrix dq = dz.block(bc.frame_rows[b], e2, u.frames_out, e2);
      Matrix dk = Matrix::Zero(u.tokens, e2);
      Matrix dv = Matrix::Zero(u.tokens, e2);
      nn::AttentionBackward(dctx, u.attention, &dq, &dk, &dv);
      dh.middleRows(bc.frame_rows[b], u.frames_out) = dq;
      g["key.weight"] += dk.transpose() * u.h_value;
      dv += dk * wk;
      Matrix demb = nn::LstmBackward(dv.leftCols(hid), u.sent_fwd, sf, gf);
      demb += nn::LstmBackward(dv.rightCols(hid), u.sent_bwd, sb, gb);
      Matrix& ge = g["embed.weight"];
      for (int n = 0; n < u.tokens; ++n) ge.row(u.sentence[static_cast<std::size_t>(n)]) += demb.row(n);
    }
  }

  for (int l = cfg_.rnn_layers - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    if (bc.drop_rnn[li].size() > 0) dh.array() *= bc.drop_rnn[li].array();
    const nn::LstmParams pf{&params_[RnnName(l, false, "w_ih")], &params_[RnnName(l, false, "w_hh")], nullptr, nullptr};
    const nn::LstmParams pb{&params_[RnnName(l, true, "w_ih")], &params_[RnnName(l, true, "w_hh")], nullptr, nullptr};
    const nn::LstmGrads gf{&g[RnnName(l, false, "w_ih")], &g[RnnName(l, false, "w_hh")], nullptr, nullptr};
    const nn::LstmGrads gb{&g[RnnName(l, true, "w_ih")], &g[RnnName(l, true, "w_hh")], nullptr, nullptr};
    const Eigen::Index in = pf.w_ih->cols();
    Matrix dx(frames_total, in);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& u = bc.utts[b];
      const Matrix dhu = Rows(dh, bc.frame_rows[b], u.frames_out);
      Matrix d = nn::LstmBackward(dhu.leftCols(hid), u.rnn_fwd[li], pf, gf);
      d += nn::LstmBackward(dhu.rightCols(hid), u.rnn_bwd[li], pb, gb);
      dx.middleRows(bc.frame_rows[b], u.frames_out) = d;
    }
    if (l > 0) {
      dx = nn::BatchNormBackward(dx, bc.bn_rnn[li - 1], params_[RnnBnName(l, "weight")], &g[RnnBnName(l, "weight")],
                                 &g[RnnBnName(l, "bias")]);
    }
    dh = std::move(dx);
  }

  // Un-flatten into the second convolution's output layout.
  Matrix da2(bc.relu2.rows(), ch);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& u = bc.utts[b];
    for (int t = 0; t < u.frames_out; ++t) {
      for (int f = 0; f < f2; ++f) {
        const Eigen::Index dst = bc.conv2_rows[b] + static_cast<Eigen::Index>(t) * f2 + f;
        for (int c = 0; c < ch; ++c) da2(dst, c) = dh(bc.frame_rows[b] + t, c * f2 + f);
      }
    }
  }
  if (bc.drop_conv2.size() > 0) da2.array() *= bc.drop_conv2.array();
  da2 = (bc.relu2.array() > 0.0).select(da2, 0.0);
  const Matrix dy2 =
      nn::BatchNormBackward(da2, bc.bn_conv2, params_["bn_conv2.weight"], &g["bn_conv2.weight"], &g["bn_conv2.bias"]);

  const nn::ConvShape shape2{ch, ch, 2, 2};
  Matrix da1(bc.relu1.rows(), ch);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& u = bc.utts[b];
    const Matrix d = Rows(dy2, bc.conv2_rows[b], static_cast<Eigen::Index>(u.frames_out) * f2);
    da1.middleRows(bc.conv1_rows[b], static_cast<Eigen::Index>(u.frames) * f1) =
        nn::ConvBackward(d, u.conv2, params_["conv2.weight"], shape2, &g["conv2.weight"], &g["conv2.bias"]);
  }
  if (bc.drop_conv1.size() > 0) da1.array() *= bc.drop_conv1.array();
  da1 = (bc.relu1.array() > 0.0).select(da1, 0.0);
  const Matrix dy1 =
      nn::BatchNormBackward(da1, bc.bn_conv1, params_["bn_conv1.weight"], &g["bn_conv1.weight"], &g["bn_conv1.bias"]);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& u = bc.utts[b];
    const Matrix d = Rows(dy1, bc.conv1_rows[b], static_cast<Eigen::Index>(u.frames) * f1);
    // Only the weight and bias gradients are needed here.
    g["conv1.weight"] += d.transpose() * u.conv1.cols;
    g["conv1.bias"] += d.colwise().sum();
  }
  return g;
}

LossResult AcousticModel::LossAndGrad(const std::vector<UtteranceInput>& batch,
                                      const std::vector<std::vector<PhonemeId>>& targets, Mode mode,
                                      std::mt19937_64* rng, ParamStore* grads) {
  if (targets.size() != batch.size()) throw ValidationError("loss: target count mismatch");
  BatchCache cache;
  const auto traces = Forward(batch, mode, rng, &cache);
  LossResult r;
  std::vector<Matrix> dlogits(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (PhonemeId id : targets[b]) {
      if (id < 0 || id >= cfg_.vocab_size) throw ValidationError("loss: target id out of range");
    }
    CtcLossResult c = CtcLoss(traces[b].logits, targets[b]);
    r.per_utterance.push_back(c.loss);
    r.skipped.push_back(!c.feasible);
    if (c.feasible) {
      r.loss += c.loss;
      ++r.feasible;
    }
    dlogits[b] = std::move(c.grad);
  }
  if (grads) *grads = Backward(cache, dlogits);
  return r;
}

Matrix AcousticModel::LogProbs(const Matrix& features, const std::vector<PhonemeId>& sentence) {
  const auto traces = Forward({UtteranceInput{&features, &sentence}}, Mode::kEval, nullptr);
  return traces[0].log_probs;
}

// ---------------------------------------------------------------------------
// Checkpoint: "MDDM1\n", u32 config length, config text, u32 tensor count,
// then per tensor: u8 kind (0 param, 1 buffer), u32 name length, name,
// u32 rows, u32 cols, rows*cols little-endian f64.

namespace {

constexpr char kCheckpointMagic[] = "MDDM1\n";

void PutU32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  void Need(std::size_t n) const {
    if (pos_ + n > s_.size()) throw ValidationError("checkpoint: truncated file");
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v;
    std::memcpy(&v, s_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::uint8_t U8() {
    Need(1);
    return static_cast<std::uint8_t>(s_[pos_++]);
  }
  std::string Bytes(std::size_t n) {
    Need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  void Doubles(double* dst, std::size_t n) {
    Need(n * 8);
    std::memcpy(dst, s_.data() + pos_, n * 8);
    pos_ += n * 8;
  }
  bool AtEnd() const { return pos_ == s_.size(); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string AcousticModel::SerializeCheckpoint() const {
  static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");
  std::string out(kCheckpointMagic);
  const std::string cfg = cfg_.Serialize();
  PutU32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  PutU32(out, static_cast<std::uint32_t>(params_.tensors.size() + buffers_.tensors.size()));
  auto put = [&](std::uint8_t kind, const std::string& name, const Matrix& m) {
    out.push_back(static_cast<char>(kind));
    PutU32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    PutU32(out, static_cast<std::uint32_t>(m.rows()));
    PutU32(out, static_cast<std::uint32_t>(m.cols()));
    out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * 8);
  };
  for (const auto& [name, m] : params_.tensors) put(0, name, m);
  for (const auto& [name, m] : buffers_.tensors) put(1, name, m);
  return out;
}

AcousticModel AcousticModel::ParseCheckpoint(const std::string& bytes) {
  const std::string magic(kCheckpointMagic);
  if (bytes.compare(0, magic.size(), magic) != 0) throw ValidationError("checkpoint: bad magic");
  const std::string body = bytes.substr(magic.size());
  Reader r(body);
  const std::uint32_t cfg_len = r.U32();
  const ModelConfig cfg = ModelConfig::Parse(r.Bytes(cfg_len));
  AcousticModel m(cfg, 0);
  const std::uint32_t count = r.U32();
  std::size_t seen = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t kind = r.U8();
    const std::string name = r.Bytes(r.U32());
    const std::uint32_t rows = r.U32(), cols = r.U32();
    ParamStore& store = kind == 0 ? m.params_ : m.buffers_;
    auto it = store.tensors.find(name);
    if (kind > 1 || it == store.tensors.end()) throw ValidationError("checkpoint: unexpected tensor '" + name + "'");
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw ValidationError("checkpoint: shape mismatch for '" + name + "'");
    }
    r.Doubles(it->second.data(), static_cast<std::size_t>(rows) * cols);
    ++seen;
  }
  if (seen != m.params_.tensors.size() + m.buffers_.tensors.size()) {
    throw ValidationError("checkpoint: missing tensors");
  }
  if (!r.AtEnd()) throw ValidationError("checkpoint: trailing bytes");
  if (!m.params_.AllFinite()) throw ValidationError("checkpoint: non-finite parameters");
  return m;
}

void AcousticModel::SaveCheckpoint(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeError("cannot write checkpoint " + path);
  const std::string bytes = SerializeCheckpoint();
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw RuntimeError("failed writing checkpoint " + path);
}

AcousticModel AcousticModel::LoadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ParseCheckpoint(ss.str());
}

}  // namespace mdd
