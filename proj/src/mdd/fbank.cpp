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

#include "mdd/fbank.hpp"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

namespace mdd {

namespace {

// fftw planning is not thread-safe; execution on distinct buffers is.
std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard<std::mutex> lock(PlannerMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(PlannerMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void PowerSpectrum(std::vector<double>* power) {
    fftw_execute(plan_);
    power->resize(static_cast<std::size_t>(n_ / 2 + 1));
    for (int k = 0; k <= n_ / 2; ++k) {
      (*power)[static_cast<std::size_t>(k)] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double HighFreq(const FbankConfig& cfg) {
  double nyquist = 0.5 * cfg.sample_rate_hz;
  return cfg.high_freq_hz > 0.0 ? cfg.high_freq_hz : nyquist + cfg.high_freq_hz;
}

// Triangular filters in the mel domain evaluated at FFT bin frequencies.
Matrix MelBanks(const FbankConfig& cfg) {
  const int nfft = cfg.fft_size();
  const int bins = nfft / 2 + 1;
  const double mel_lo = HzToMel(cfg.low_freq_hz);
  const double mel_hi = HzToMel(HighFreq(cfg));
  const double delta = (mel_hi - mel_lo) / (cfg.num_mel_bins + 1);
  Matrix banks = Matrix::Zero(cfg.num_mel_bins, bins);
  for (int m = 0; m < cfg.num_mel_bins; ++m) {
    double left = mel_lo + m * delta;
    double center = left + delta;
    double right = center + delta;
    for (int k = 0; k < bins; ++k) {
      double mel = HzToMel(static_cast<double>(k) * cfg.sample_rate_hz / nfft);
      if (mel > left && mel < right) {
        banks(m, k) = mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
      }
    }
  }
  return banks;
}

}  // namespace

int FbankConfig::window_samples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_length_ms / 1000.0));
}

int FbankConfig::hop_samples() const {
  return static_cast<int>(std::lround(sample_rate_hz * frame_shift_ms / 1000.0));
}

int FbankConfig::fft_size() const {
  int n = 1;
  while (n < window_samples()) n <<= 1;
  return n;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelCenterFrequencies(const FbankConfig& cfg) {
  const double mel_lo = HzToMel(cfg.low_freq_hz);
  const double delta = (HzToMel(HighFreq(cfg)) - mel_lo) / (cfg.num_mel_bins + 1);
  std::vector<double> out;
  for (int m = 0; m < cfg.num_mel_bins; ++m) out.push_back(MelToHz(mel_lo + (m + 1) * delta));
  return out;
}

FeatureMatrix ComputeFbank(const Waveform& w, const FbankConfig& cfg) {
  if (w.sample_rate_hz != cfg.sample_rate_hz) {
    throw ValidationError("fbank: waveform rate " + std::to_string(w.sample_rate_hz) + " Hz != configured " +
                          std::to_string(cfg.sample_rate_hz) + " Hz");
  }
  const int win = cfg.window_samples();
  const int hop = cfg.hop_samples();
  const auto n = static_cast<long long>(w.samples.size());
  if (win <= 0 || hop <= 0) throw ValidationError("fbank: frame geometry must be positive");
  if (n < win) throw ValidationError("fbank: audio shorter than one analysis window");
  const auto frames = static_cast<Eigen::Index>(1 + (n - win) / hop);

  const int nfft = cfg.fft_size();
  const Matrix banks = MelBanks(cfg);
  std::vector<double> window(static_cast<std::size_t>(win));
  for (int i = 0; i < win; ++i) {
    window[static_cast<std::size_t>(i)] =
        win > 1 ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (win - 1)) : 1.0;
  }

  FeatureMatrix out;
  out.frame_length_s = static_cast<double>(win) / cfg.sample_rate_hz;
  out.frame_shift_s = static_cast<double>(hop) / cfg.sample_rate_hz;
  out.frames.resize(frames, cfg.feature_dim());

  RealFft fft(nfft);
  std::vector<double> power;
  Vector spec(nfft / 2 + 1);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const double* x = w.samples.data() + t * hop;
    double energy = 0.0;
    double* in = fft.input();
    for (int i = 0; i < win; ++i) {
      energy += x[i] * x[i];
      in[i] = x[i] * window[static_cast<std::size_t>(i)];
    }
    for (int i = win; i < nfft; ++i) in[i] = 0.0;
    fft.PowerSpectrum(&power);
    for (int k = 0; k <= nfft / 2; ++k) spec[k] = power[static_cast<std::size_t>(k)];
    Vector mel = banks * spec;
    for (int m = 0; m < cfg.num_mel_bins; ++m) out.frames(t, m) = std::log(std::max(mel[m], cfg.log_floor));
    out.frames(t, cfg.num_mel_bins) = std::log(std::max(energy, cfg.log_floor));
  }
  return out;
}

void CmvnStats::Accumulate(const FeatureMatrix& feat) {
  const auto d = feat.dim();
  if (count == 0 && sum.size() == 0) {
    sum = Vector::Zero(d);
    sum_sq = Vector::Zero(d);
  }
  if (sum.size() != d) {
    throw ValidationError("cmvn: feature dim " + std::to_string(d) + " != stats dim " + std::to_string(sum.size()));
  }
  for (Eigen::Index t = 0; t < feat.num_frames(); ++t) {
    auto row = feat.frames.row(t).transpose();
    sum += row;
    sum_sq += row.cwiseProduct(row);
  }
  count += feat.num_frames();
}

void CmvnStats::Merge(const CmvnStats& other) {
  if (other.sum.size() == 0) return;
  if (sum.size() == 0) {
    *this = other;
    return;
  }
  if (sum.size() != other.sum.size()) throw ValidationError("cmvn: cannot merge stats of different dims");
  count += other.count;
  sum += other.sum;
  sum_sq += other.sum_sq;
}

Vector CmvnStats::Mean() const {
  if (count <= 0) throw ValidationError("cmvn: stats have zero count");
  return sum / static_cast<double>(count);
}

Vector CmvnStats::Variance() const {
  Vector m = Mean();
  Vector v = sum_sq / static_cast<double>(count) - m.cwiseProduct(m);
  return v.cwiseMax(0.0);
}

std::string CmvnStats::Serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "MDDCMVN1 " << sum.size() << ' ' << count << '\n';
  for (Eigen::Index i = 0; i < sum.size(); ++i) os << (i ? " " : "") << sum[i];
  os << '\n';
  for (Eigen::Index i = 0; i < sum_sq.size(); ++i) os << (i ? " " : "") << sum_sq[i];
  os << '\n';
  return os.str();
}

CmvnStats CmvnStats::Parse(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  Eigen::Index d = 0;
  CmvnStats s;
  if (!(is >> magic >> d >> s.count) || magic != "MDDCMVN1" || d < 0) {
    throw ValidationError("cmvn stats: bad header");
  }
  s.sum.resize(d);
  s.sum_sq.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(is >> s.sum[i])) throw ValidationError("cmvn stats: truncated sum row");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(is >> s.sum_sq[i])) throw ValidationError("cmvn stats: truncated sum_sq row");
  }
  return s;
}

void CmvnStats::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write " + path);
  out << Serialize();
}

CmvnStats CmvnStats::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open cmvn stats " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

CmvnStats AccumulateCmvn(const std::vector<FeatureMatrix>& feats) {
  CmvnStats s;
  for (auto& f : feats) s.Accumulate(f);
  return s;
}

FeatureMatrix ApplyCmvn(const FeatureMatrix& feat, const CmvnStats& stats, bool norm_vars) {
  if (stats.count <= 0) throw ValidationError("cmvn: stats have zero count");
  if (stats.sum.size() != feat.dim()) throw ValidationError("cmvn: dimension mismatch");
  RowVector mean = stats.Mean().transpose();
  FeatureMatrix out = feat;
  out.frames.rowwise() -= mean;
  if (norm_vars) {
    RowVector scale = stats.Variance().cwiseMax(kCmvnVarianceFloor).cwiseSqrt().cwiseInverse().transpose();
    out.frames.array().rowwise() *= scale.array();
  }
  return out;
}

FeatureMatrix StackFrames(const FeatureMatrix& feat, int context) {
  const auto t_len = feat.num_frames();
  const auto d = feat.dim();
  if (t_len < 1) throw ValidationError("stack_frames: need at least one frame");
  const int width = 2 * context + 1;
  FeatureMatrix out;
  out.frame_shift_s = feat.frame_shift_s;
  out.frame_length_s = feat.frame_length_s;
  out.frames.resize(t_len, d * width);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (int k = -context; k <= context; ++k) {
      Eigen::Index src = std::clamp<Eigen::Index>(t + k, 0, t_len - 1);
      out.frames.block(t, (k + context) * d, 1, d) = feat.frames.row(src);
    }
  }
  return out;
}

}  // namespace mdd
