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
#include <numbers>
#include <random>

#include "mdd/fbank.hpp"
#include "mdd/feature_archive.hpp"
#include "test_util.hpp"

using namespace mdd;

namespace {

Waveform Tone(double hz, std::size_t n) {
  Waveform w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = 0.3 * std::sin(2.0 * std::numbers::pi * hz * i / 16000.0);
  return w;
}

FeatureMatrix Frames(const Matrix& m) {
  FeatureMatrix f;
  f.frames = m;
  return f;
}

}  // namespace

TEST_CASE("frame count") {
  const FbankConfig cfg;
  CHECK(cfg.window_samples() == 400);
  CHECK(cfg.hop_samples() == 160);
  CHECK(cfg.feature_dim() == 81);
  CHECK(ComputeFbank(Tone(300.0, 400), cfg).num_frames() == 1);
  CHECK(ComputeFbank(Tone(300.0, 880), cfg).num_frames() == 4);
  CHECK(ComputeFbank(Tone(300.0, 16000), cfg).dim() == 81);
}

TEST_CASE("mel scale") {
  CHECK(HzToMel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(MelToHz(HzToMel(1234.5)) == doctest::Approx(1234.5));
  const auto centers = MelCenterFrequencies(FbankConfig{});
  REQUIRE(centers.size() == 80);
  for (std::size_t k = 1; k < centers.size(); ++k) CHECK(centers[k] > centers[k - 1]);
  CHECK(centers.front() > 20.0);
  CHECK(centers.back() < 8000.0);
}

TEST_CASE("a tone at a filter centre peaks in that filter") {
  const FbankConfig cfg;
  const auto centers = MelCenterFrequencies(cfg);
  for (int k : {20, 40, 60, 79}) {
    const auto f = ComputeFbank(Tone(centers[static_cast<std::size_t>(k)], 4000), cfg);
    for (Eigen::Index t = 0; t < f.num_frames(); ++t) {
      Eigen::Index arg = 0;
      f.frames.row(t).head(80).maxCoeff(&arg);
      CHECK(arg == k);
    }
  }
}

TEST_CASE("silence stays finite") {
  Waveform w;
  w.samples.assign(1600, 0.0);
  const auto f = ComputeFbank(w, FbankConfig{});
  CHECK(f.frames.allFinite());
  CHECK(f.frames.maxCoeff() == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("cmvn statistics") {
  CmvnStats s;
  s.Accumulate(Frames(Matrix::Constant(1, 1, 1.0)));
  s.Accumulate(Frames(Matrix::Constant(1, 1, 3.0)));
  CHECK(s.count == 2);
  CHECK(s.Mean()(0) == doctest::Approx(2.0));
  CHECK(s.Variance()(0) == doctest::Approx(1.0));
  CHECK(AccumulateCmvn({}).count == 0);

  std::mt19937_64 rng(2);
  const Matrix big = test::RandomMatrix(1000, 7, rng, 3.0).array() + 5.0;
  CmvnStats a, b;
  a.Accumulate(Frames(big.topRows(400)));
  b.Accumulate(Frames(big.bottomRows(600)));
  a.Merge(b);
  for (Eigen::Index d = 0; d < 7; ++d) {
    double mean = 0.0;
    for (Eigen::Index t = 0; t < 1000; ++t) mean += big(t, d);
    mean /= 1000.0;
    double var = 0.0;
    for (Eigen::Index t = 0; t < 1000; ++t) var += (big(t, d) - mean) * (big(t, d) - mean);
    var /= 1000.0;
    CHECK(std::abs(a.Mean()(d) - mean) <= 1e-9);
    CHECK(std::abs(a.Variance()(d) - var) <= 1e-9);
  }
  const auto back = CmvnStats::Parse(a.Serialize());
  CHECK(back.count == a.count);
  CHECK((back.sum - a.sum).cwiseAbs().maxCoeff() <= 1e-9 * a.sum.cwiseAbs().maxCoeff());
}

TEST_CASE("cmvn application") {
  std::mt19937_64 rng(6);
  Matrix m = test::RandomMatrix(300, 5, rng, 2.0).array() + 4.0;
  m.col(4).setConstant(7.0);
  const auto feat = Frames(m);
  CmvnStats s;
  s.Accumulate(feat);
  const auto norm = ApplyCmvn(feat, s, true);
  for (Eigen::Index d = 0; d < 4; ++d) {
    const double mean = norm.frames.col(d).mean();
    const double var = (norm.frames.col(d).array() - mean).square().mean();
    CHECK(std::abs(mean) <= 1e-6);
    CHECK(std::abs(var - 1.0) <= 1e-6);
  }
  CHECK(norm.frames.col(4).allFinite());
  CHECK(norm.frames.col(4).cwiseAbs().maxCoeff() <= 1e-6);

  const auto centred = ApplyCmvn(feat, s, false);
  for (Eigen::Index d = 0; d < 4; ++d) {
    CHECK(std::abs(centred.frames.col(d).mean()) <= 1e-6);
    CHECK((centred.frames.col(d) - (m.col(d).array() - m.col(d).mean()).matrix()).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("frame stacking") {
  Matrix one(1, 81);
  for (int i = 0; i < 81; ++i) one(0, i) = i;
  const auto s1 = StackFrames(Frames(one));
  REQUIRE(s1.frames.rows() == 1);
  REQUIRE(s1.frames.cols() == 243);
  for (int k = 0; k < 3; ++k) CHECK(s1.frames.block(0, 81 * k, 1, 81) == one);

  std::mt19937_64 rng(1);
  const Matrix three = test::RandomMatrix(3, 81, rng);
  const auto s3 = StackFrames(Frames(three));
  CHECK(s3.frames.block(1, 0, 1, 81) == three.row(0));
  CHECK(s3.frames.block(1, 81, 1, 81) == three.row(1));
  CHECK(s3.frames.block(1, 162, 1, 81) == three.row(2));
  CHECK(s3.frames.block(0, 0, 1, 81) == three.row(0));
  CHECK(s3.frames.block(2, 162, 1, 81) == three.row(2));
  CHECK(StackFrames(Frames(test::RandomMatrix(17, 81, rng))).frames.rows() == 17);
}

TEST_CASE("feature archive") {
  test::TempDir dir("ark");
  std::mt19937_64 rng(12);
  const Matrix a = test::RandomMatrix(5, 243, rng), b = test::RandomMatrix(2, 243, rng);
  for (const char* tag : {"1", "2"}) {
    FeatureArchiveWriter w(dir.str(std::string("f") + tag + ".ark"), dir.str(std::string("f") + tag + ".index"));
    w.Write("utt_a", a);
    w.Write("utt_b", b);
    w.Close();
  }
  CHECK(test::ReadFile(dir.str("f1.ark")) == test::ReadFile(dir.str("f2.ark")));
  CHECK(test::ReadFile(dir.str("f1.ark")).substr(0, 5) == "MDDF1");
  FeatureArchiveReader r(dir.str("f1.ark"), dir.str("f1.index"));
  CHECK(r.ids() == std::vector<std::string>{"utt_a", "utt_b"});
  CHECK(r.Contains("utt_b"));
  CHECK_FALSE(r.Contains("utt_c"));
  const Matrix back = r.Read("utt_b");
  REQUIRE(back.rows() == 2);
  CHECK((back - b.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS(r.Read("utt_c"));
}
