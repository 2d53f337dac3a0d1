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

#include "mdd/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "mdd/ctc.hpp"
#include "mdd/metrics.hpp"

namespace mdd {

std::string EpochLog::Format() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d %.6f %.6f", epoch, loss, val_per);
  return buf;
}

double EvaluatePer(AcousticModel& model, const std::vector<TrainExample>& data) {
  EditCounts total;
  for (const auto& ex : data) {
    const Matrix lp = model.LogProbs(ex.features, ex.canonical);
    total += CountEdits(ex.target, GreedyDecode(lp));
  }
  if (total.ref_length == 0) return 0.0;
  return static_cast<double>(total.errors()) / static_cast<double>(total.ref_length);
}

namespace {

std::vector<std::vector<std::size_t>> Buckets(const std::vector<TrainExample>& data, int batch_size) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].features.rows() < data[b].features.rows();
  });
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace

TrainResult Train(AcousticModel model, const std::vector<TrainExample>& train,
                  const std::vector<TrainExample>& validation, const TrainOptions& opts,
                  const PhonemeAlphabet& alphabet, const ConfusionTable& table,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.empty()) throw ValidationError("train: empty training set");
  if (opts.batch_size < 1) throw ValidationError("train: batch size must be positive");
  if (opts.epochs < 0) throw ValidationError("train: epochs must be non-negative");
  if (!(opts.lr >= 0.0)) throw ValidationError("train: learning rate must be non-negative");
  opts.augment.Validate();

  const auto& val = validation.empty() ? train : validation;
  const auto batches = Buckets(train, opts.batch_size);
  std::mt19937_64 shuffle_rng(opts.seed ^ StableHash("batch-order"));
  std::mt19937_64 dropout_rng(opts.seed ^ StableHash("dropout"));

  ParamStore m1 = model.params().ZerosLike();
  ParamStore m2 = model.params().ZerosLike();
  std::int64_t step = 0;

  TrainResult result;
  result.best = model;
  result.best_val_per = EvaluatePer(model, val);
  result.best_epoch = 0;

  std::vector<std::size_t> batch_order(batches.size());
  std::iota(batch_order.begin(), batch_order.end(), 0);
  std::vector<double> utt_loss(train.size());
  std::vector<bool> utt_skipped(train.size());

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::shuffle(batch_order.begin(), batch_order.end(), shuffle_rng);
    const int aug_epoch = opts.freeze_augmentation ? 0 : epoch;
    for (std::size_t bi : batch_order) {
      const auto& idx = batches[bi];
      std::vector<std::vector<PhonemeId>> sentences(idx.size()), targets(idx.size());
      std::vector<UtteranceInput> inputs(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto& ex = train[idx[k]];
        sentences[k] = Augment(ex.canonical, opts.augment, alphabet, table, ex.utterance_id, aug_epoch);
        targets[k] = ex.target;
        inputs[k] = {&ex.features, &sentences[k]};
      }
      ParamStore grads;
      const LossResult lr = model.LossAndGrad(inputs, targets, Mode::kTrain, &dropout_rng, &grads);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        utt_loss[idx[k]] = lr.per_utterance[k];
        utt_skipped[idx[k]] = lr.skipped[k];
      }
      if (lr.feasible == 0) continue;
      if (!std::isfinite(lr.loss) || !grads.AllFinite()) {
        std::string ids;
        for (std::size_t i : idx) ids += " " + train[i].utterance_id;
        throw RuntimeError("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss or gradient"
                           " in batch:" + ids + ")");
      }
      grads.Scale(1.0 / lr.feasible);
      if (opts.clip_norm > 0.0) {
        const double norm = std::sqrt(grads.SquaredNorm());
        if (norm > opts.clip_norm) grads.Scale(opts.clip_norm / norm);
      }
      ++step;
      const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
      for (auto& [name, p] : model.params().tensors) {
        const Matrix& g = grads[name];
        Matrix& a = m1[name];
        Matrix& b = m2[name];
        a = opts.beta1 * a + (1.0 - opts.beta1) * g;
        b = opts.beta2 * b + (1.0 - opts.beta2) * g.cwiseProduct(g);
        p.array() -= opts.lr * (a.array() / bc1) / ((b.array() / bc2).sqrt() + opts.adam_eps);
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (utt_skipped[i]) {
        ++entry.skipped;
        continue;
      }
      sum += utt_loss[i];
      ++n;
    }
    entry.loss = n > 0 ? sum / n : 0.0;
    entry.val_per = EvaluatePer(model, val);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (entry.val_per < result.best_val_per) {
      result.best_val_per = entry.val_per;
      result.best_epoch = epoch;
      result.best = model;
    }
    if (opts.stop_at_per >= 0.0 && entry.val_per <= opts.stop_at_per) break;
  }
  result.last = std::move(model);
  return result;
}

}  // namespace mdd
