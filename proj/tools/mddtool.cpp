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

// mddtool: command-line front end over the C API.
//
// Exit codes: 0 success, 1 runtime error, 2 validation or usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mdd/mdd.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct Failure {
  int code;
};

int ExitCode(mdd_status s) {
  switch (s) {
    case MDD_OK:
      return kExitOk;
    case MDD_ERR_VALIDATION:
    case MDD_ERR_ARGUMENT:
      return kExitValidation;
    default:
      return kExitRuntime;
  }
}

void Check(mdd_status s) {
  if (s == MDD_OK) return;
  std::cerr << "error: " << mdd_last_error() << '\n';
  throw Failure{ExitCode(s)};
}

using ConfigPtr = std::unique_ptr<mdd_config, decltype(&mdd_config_free)>;
using ReportPtr = std::unique_ptr<mdd_report, decltype(&mdd_report_free)>;

std::string TakeString(char* s) {
  std::string out(s ? s : "");
  mdd_string_free(s);
  return out;
}

std::string Dump(const mdd_config* cfg) {
  char* text = nullptr;
  Check(mdd_config_dump(cfg, &text));
  return TakeString(text);
}

void PrintReport(const mdd_report* r) {
  const int n = mdd_report_warning_count(r);
  for (int i = 0; i < n; ++i) {
    if (const char* m = mdd_report_message(r, i)) std::cerr << "warning: " << m << '\n';
  }
  std::cout << mdd_report_summary(r);
  std::cout.flush();
}

void Progress(const char* line, void*) {
  std::cout << line << '\n';
  std::cout.flush();
}

// Command-line values that map onto configuration keys. Anything set here
// wins over the config file and over --set.
struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;

  template <typename T>
  void Add(const std::string& key, const std::optional<T>& v) {
    if (!v) return;
    if constexpr (std::is_same_v<T, std::string>) {
      values.emplace_back(key, *v);
    } else {
      values.emplace_back(key, std::to_string(*v));
    }
  }
};

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mispronunciation detection and diagnosis pipeline", "mddtool"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> workdir;
  bool config_dump = false;
  bool version = false;
  app.add_option("-c,--config", config_path, "Configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override one key: section.key=value (repeatable)");
  app.add_option("--threads", threads, "Worker threads; 1 is bit-reproducible");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--workdir", workdir, "Working directory");
  app.add_flag("--config-dump", config_dump, "Print the resolved configuration and exit");
  app.add_flag("--version", version, "Print the version and the resolved configuration");

  auto* prepare = app.add_subcommand("prepare", "Ingest corpora into Kaldi-style split directories");
  auto* features = app.add_subcommand("features", "Compute normalized filterbank features");

  auto* train_lm = app.add_subcommand("train-lm", "Train the phone n-gram language model");
  std::optional<int> lm_order;
  train_lm->add_option("--order", lm_order, "N-gram order");

  auto* train = app.add_subcommand("train", "Train the acoustic model");
  std::optional<int> epochs;
  std::optional<std::string> variant;
  train->add_option("--epochs", epochs, "Training epochs");
  train->add_option("--variant", variant, "attention or baseline_ctc");

  auto* decode = app.add_subcommand("decode", "Beam-search decode a split");
  std::optional<int> beam;
  std::optional<double> lm_weight, insertion_bonus;
  std::optional<std::string> split;
  bool no_lm = false;
  decode->add_option("--beam", beam, "Beam width");
  decode->add_option("--lm-weight", lm_weight, "Language model weight");
  decode->add_option("--insertion-bonus", insertion_bonus, "Per-phoneme insertion bonus");
  decode->add_flag("--no-lm", no_lm, "Decode without the language model");
  decode->add_option("--split", split, "train, validation or test");

  auto* evaluate = app.add_subcommand("evaluate", "Score decoded hypotheses");
  evaluate->add_option("--split", split, "train, validation or test");

  auto* preview = app.add_subcommand("augment-preview", "Show augmented sentence-encoder inputs");
  std::optional<std::string> strategy;
  std::optional<double> rate;
  int limit = 10;
  int epoch = 0;
  preview->add_option("--strategy", strategy, "none, random, vowel_consonant or confusion_pair");
  preview->add_option("--rate", rate, "Augmentation rate");
  preview->add_option("--limit", limit, "Utterances to show")->check(CLI::NonNegativeNumber);
  preview->add_option("--epoch", epoch, "Epoch whose draw to show");

  auto* synth = app.add_subcommand("synth-corpus", "Write the synthetic toy corpus");
  std::string synth_root;
  mdd_synth_options synth_opts;
  mdd_synth_options_default(&synth_opts);
  synth->add_option("root", synth_root, "Output directory")->required();
  synth->add_option("--train", synth_opts.train_utterances, "Training utterances");
  synth->add_option("--validation", synth_opts.validation_utterances, "Validation utterances");
  synth->add_option("--test", synth_opts.test_utterances, "Test utterances");
  synth->add_option("--mispronunciation-rate", synth_opts.mispronunciation_rate, "Test-set substitution rate");
  synth->add_option("--synth-seed", synth_opts.seed, "Synthesis seed");

  auto* count = app.add_subcommand("count-params", "Count trainable parameters of the configured model");
  int input_dim = 243;
  int vocab = 42;
  count->add_option("--input-dim", input_dim, "Stacked feature width");
  count->add_option("--vocab", vocab, "Phoneme vocabulary size (blank excluded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    mdd_config* raw = nullptr;
    if (config_path.empty()) {
      Check(mdd_config_new(&raw));
    } else {
      Check(mdd_config_load(config_path.c_str(), &raw));
    }
    ConfigPtr cfg(raw, &mdd_config_free);

    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --set expects section.key=value, got '" << s << "'\n";
        return kExitValidation;
      }
      Check(mdd_config_set(cfg.get(), s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
    }

    Overrides o;
    o.Add("general.threads", threads);
    o.Add("general.seed", seed);
    o.Add("paths.workdir", workdir);
    o.Add("lm.order", lm_order);
    o.Add("train.epochs", epochs);
    o.Add("model.variant", variant);
    o.Add("decode.beam", beam);
    if (lm_weight) o.values.emplace_back("decode.lm_weight", Num(*lm_weight));
    if (insertion_bonus) o.values.emplace_back("decode.insertion_bonus", Num(*insertion_bonus));
    if (no_lm) o.values.emplace_back("decode.use_lm", "false");
    o.Add("decode.split", split);
    o.Add("augment.strategy", strategy);
    if (rate) o.values.emplace_back("augment.rate", Num(*rate));
    for (const auto& [k, v] : o.values) Check(mdd_config_set(cfg.get(), k.c_str(), v.c_str()));

    if (version) {
      std::cout << "mddtool " << mdd_version() << "\n\n" << Dump(cfg.get());
      return kExitOk;
    }
    if (config_dump) {
      std::cout << Dump(cfg.get());
      return kExitOk;
    }

    if (*count) {
      std::int64_t n = 0;
      Check(mdd_count_params(cfg.get(), input_dim, vocab, &n));
      std::cout << n << '\n';
      return kExitOk;
    }

    if (*synth) {
      mdd_report* r = nullptr;
      Check(mdd_synth_corpus(synth_root.c_str(), &synth_opts, &r));
      ReportPtr report(r, &mdd_report_free);
      PrintReport(report.get());
      return kExitOk;
    }

    Check(mdd_config_validate(cfg.get()));

    if (*preview) {
      mdd_report* r = nullptr;
      Check(mdd_run_augment_preview(cfg.get(), limit, epoch, &r));
      ReportPtr report(r, &mdd_report_free);
      PrintReport(report.get());
      return kExitOk;
    }

    const std::pair<CLI::App*, const char*> stages[] = {
        {prepare, "prepare"}, {features, "features"}, {train_lm, "train-lm"},
        {train, "train"},     {decode, "decode"},     {evaluate, "evaluate"},
    };
    for (const auto& [sub, name] : stages) {
      if (!*sub) continue;
      mdd_report* r = nullptr;
      Check(mdd_run_stage(cfg.get(), name, &Progress, nullptr, &r));
      ReportPtr report(r, &mdd_report_free);
      PrintReport(report.get());
      return kExitOk;
    }

    std::cerr << app.help();
    return kExitValidation;
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
