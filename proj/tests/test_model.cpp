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

#include "gradcheck.hpp"
#include "mdd/model.hpp"
#include "mdd/trainer.hpp"
#include "mdd/synth.hpp"

using namespace mdd;

namespace {

std::int64_t TensorSize(const AcousticModel& m, const std::string& name) { return m.params()[name].size(); }

}  // namespace

TEST_CASE("parameter count of the reference configuration") {
  const ModelConfig cfg;
  CHECK(cfg.rnn_input_dim() == 32 * 61);
  CHECK(CountParams(cfg) == 21246432);

  ModelConfig tiny = gradcheck::TinyConfig(ModelVariant::kAttention);
  const AcousticModel m(tiny, 1);
  CHECK(m.params().NumScalars() == CountParams(tiny));

  // Instantiate the reference model once to check per-tensor sizes.
  const AcousticModel full(cfg, 1);
  CHECK(full.params().NumScalars() == 21246432);
  std::int64_t first = 0;
  for (const char* dir : {"fwd", "bwd"}) {
    for (const char* w : {"w_ih", "w_hh"}) first += TensorSize(full, std::string("rnn.l0.") + dir + "." + w);
  }
  CHECK(first == 2 * 4 * 384 * (1952 + 384));
  CHECK(first == 7176192);
  CHECK(TensorSize(full, "embed.weight") == 21504);
  CHECK(full.params()["out.weight"].rows() == 43);
  CHECK(full.params()["out.weight"].cols() == 1536);

  ModelConfig base = cfg;
  base.variant = ModelVariant::kBaselineCtc;
  CHECK(AcousticModel(base, 1).params().NumScalars() == CountParams(base));
  CHECK(CountParams(base) < CountParams(cfg));
}

TEST_CASE("output geometry and normalization") {
  CHECK(ModelConfig::DownsampledLength(1) == 1);
  CHECK(ModelConfig::DownsampledLength(100) == 50);
  AcousticModel m(ModelConfig{}, 3);
  std::mt19937_64 rng(1);
  const Matrix feats = test::RandomMatrix(100, 243, rng);
  const std::vector<PhonemeId> sent{1, 5, 9};
  const auto traces = m.Forward({{&feats, &sent}}, Mode::kEval, nullptr);
  REQUIRE(traces.size() == 1);
  CHECK(traces[0].h_query.rows() == 50);
  CHECK(traces[0].h_query.cols() == 768);
  CHECK(traces[0].log_probs.rows() == 50);
  CHECK(traces[0].log_probs.cols() == 43);
  for (Eigen::Index t = 0; t < 50; ++t) CHECK(std::abs(LogSumExp(traces[0].log_probs.row(t))) <= 1e-5);

  const Matrix zeros = Matrix::Zero(10, 243);
  CHECK(m.LogProbs(zeros, sent).allFinite());
}

TEST_CASE("sentence encoder") {
  ModelConfig cfg = gradcheck::TinyConfig(ModelVariant::kAttention);
  cfg.rnn_hidden = 6;
  AcousticModel m(cfg, 5);
  std::mt19937_64 rng(2);
  const Matrix feats = test::RandomMatrix(9, cfg.input_dim, rng);
  const std::vector<PhonemeId> one{2}, ab{0, 1}, ba{1, 0};
  auto trace = [&](const std::vector<PhonemeId>& s) { return m.Forward({{&feats, &s}}, Mode::kEval, nullptr)[0]; };

  const auto t1 = trace(one);
  CHECK(t1.h_value.rows() == 1);
  CHECK(t1.h_value.cols() == 12);
  CHECK(t1.h_key.rows() == 1);
  CHECK((t1.attention.array() - 1.0).abs().maxCoeff() == 0.0);
  for (Eigen::Index t = 0; t < t1.context.rows(); ++t) CHECK(t1.context.row(t) == t1.h_value.row(0));

  const auto tab = trace(ab), tba = trace(ba);
  CHECK((tab.h_value.row(0) - tba.h_value.row(1)).cwiseAbs().maxCoeff() > 1e-6);
  CHECK(tab.h_key == tab.h_value * m.params()["key.weight"].transpose());
  for (Eigen::Index t = 0; t < tab.attention.rows(); ++t) CHECK(tab.attention.row(t).sum() == doctest::Approx(1.0));
}

TEST_CASE("baseline and attention variants differ") {
  std::mt19937_64 rng(3);
  const Matrix feats = test::RandomMatrix(8, 6, rng);
  const std::vector<PhonemeId> s{1, 2};
  AcousticModel a(gradcheck::TinyConfig(ModelVariant::kAttention), 1);
  AcousticModel b(gradcheck::TinyConfig(ModelVariant::kBaselineCtc), 2);
  const Matrix la = a.LogProbs(feats, s), lb = b.LogProbs(feats, s);
  REQUIRE(la.rows() == lb.rows());
  CHECK((la - lb).cwiseAbs().maxCoeff() > 1e-6);
  // The baseline ignores the sentence.
  CHECK(b.LogProbs(feats, {0}) == lb);
}

TEST_CASE("whole-model gradients match finite differences") {
  for (auto variant : {ModelVariant::kAttention, ModelVariant::kBaselineCtc}) {
    CAPTURE(VariantName(variant));
    const auto errors = gradcheck::Model(variant, 17);
    for (const auto& [name, err] : errors) {
      CAPTURE(name);
      CHECK(err <= 1e-3);
    }
    if (variant == ModelVariant::kAttention) {
      CHECK(errors.count("embed.weight"));
      CHECK(errors.count("key.weight"));
      CHECK(errors.count("sent.fwd.b_ih"));
    }
  }
}

TEST_CASE("duplicated utterance doubles its gradient") {
  ModelConfig cfg = gradcheck::TinyConfig(ModelVariant::kAttention);
  cfg.dropout = 0.0;
  AcousticModel m(cfg, 8);
  std::mt19937_64 rng(4);
  const Matrix f = test::RandomMatrix(8, 6, rng);
  const std::vector<PhonemeId> s{1, 2, 3};
  const std::vector<PhonemeId> target{1, 3};
  std::mt19937_64 drop(1);
  ParamStore g1, g2;
  const auto l1 = m.LossAndGrad({{&f, &s}}, {target}, Mode::kTrain, &drop, &g1);
  const auto l2 = m.LossAndGrad({{&f, &s}, {&f, &s}}, {target, target}, Mode::kTrain, &drop, &g2);
  CHECK(l2.loss == doctest::Approx(2.0 * l1.loss).epsilon(1e-10));
  for (const auto& [name, g] : g1.tensors) {
    CAPTURE(name);
    CHECK((g2[name] - 2.0 * g).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + g.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("infeasible targets are skipped") {
  AcousticModel m(gradcheck::TinyConfig(ModelVariant::kBaselineCtc), 1);
  std::mt19937_64 rng(5);
  const Matrix f = test::RandomMatrix(4, 6, rng);  // T' = 2
  const std::vector<PhonemeId> s{0};
  std::mt19937_64 drop(1);
  ParamStore g;
  const auto r = m.LossAndGrad({{&f, &s}, {&f, &s}}, {{0, 1, 2}, {1}}, Mode::kTrain, &drop, &g);
  CHECK(r.feasible == 1);
  CHECK(r.skipped == std::vector<bool>{true, false});
  CHECK(std::isinf(r.per_utterance[0]));
  CHECK(std::isfinite(r.loss));
  CHECK(g.AllFinite());
}

TEST_CASE("eval mode leaves the model untouched") {
  AcousticModel m(gradcheck::TinyConfig(ModelVariant::kAttention), 6);
  const std::string before = m.SerializeCheckpoint();
  std::mt19937_64 rng(6);
  const Matrix f = test::RandomMatrix(7, 6, rng);
  m.LogProbs(f, {1, 2});
  CHECK(m.SerializeCheckpoint() == before);
  std::mt19937_64 drop(1);
  const std::vector<PhonemeId> s{1, 2};
  m.Forward({{&f, &s}}, Mode::kTrain, &drop);
  CHECK(m.SerializeCheckpoint() != before);  // running statistics moved
}

TEST_CASE("checkpoint round trip") {
  AcousticModel m(gradcheck::TinyConfig(ModelVariant::kAttention), 7);
  const std::string bytes = m.SerializeCheckpoint();
  CHECK(bytes.substr(0, 6) == "MDDM1\n");
  AcousticModel back = AcousticModel::ParseCheckpoint(bytes);
  CHECK(back.config() == m.config());
  CHECK(back.SerializeCheckpoint() == bytes);
  std::mt19937_64 rng(7);
  const Matrix f = test::RandomMatrix(7, 6, rng);
  CHECK(back.LogProbs(f, {1}) == m.LogProbs(f, {1}));

  test::TempDir dir("ckpt");
  m.SaveCheckpoint(dir.str("m.ckpt"));
  CHECK(test::ReadFile(dir.str("m.ckpt")) == bytes);
  CHECK(AcousticModel::LoadCheckpoint(dir.str("m.ckpt")).SerializeCheckpoint() == bytes);

  CHECK_THROWS(AcousticModel::ParseCheckpoint("MDDX1\n"));
  CHECK_THROWS(AcousticModel::ParseCheckpoint(bytes.substr(0, bytes.size() - 3)));
  CHECK_THROWS(AcousticModel::ParseCheckpoint(bytes + "x"));
  CHECK_THROWS(AcousticModel::LoadCheckpoint(dir.str("missing.ckpt")));
}

TEST_CASE("config text round trip and validation") {
  ModelConfig c = gradcheck::TinyConfig(ModelVariant::kBaselineCtc);
  CHECK(ModelConfig::Parse(c.Serialize()) == c);
  c.rnn_layers = 0;
  CHECK_THROWS_AS(c.Validate(), ValidationError);
  c = ModelConfig{};
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.Validate(), ValidationError);
  CHECK(ParseVariant("baseline") == ModelVariant::kBaselineCtc);
  CHECK_THROWS_AS(ParseVariant("transformer"), ValidationError);
}
