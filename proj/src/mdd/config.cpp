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

#include "mdd/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace mdd {

namespace {

int ToInt(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ValidationError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t ToU64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ValidationError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double ToDouble(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ValidationError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool ToBool(const std::string& key, const std::string& v) {
  const std::string u = ToUpper(v);
  if (u == "TRUE" || u == "1" || u == "YES" || u == "ON") return true;
  if (u == "FALSE" || u == "0" || u == "NO" || u == "OFF") return false;
  throw ValidationError(key + ": expected true/false, got '" + v + "'");
}

std::string Num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::string Bool(bool b) { return b ? "true" : "false"; }

struct Field {
  const char* key;  // "section.name"
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define MDD_INT(KEY, MEMBER)                                                                                 \
  Field {                                                                                                    \
    KEY, [](PipelineConfig& c, const std::string& k, const std::string& v) { c.MEMBER = ToInt(k, v); },     \
        [](const PipelineConfig& c) { return std::to_string(c.MEMBER); }                                     \
  }
#define MDD_DBL(KEY, MEMBER)                                                                                 \
  Field {                                                                                                    \
    KEY, [](PipelineConfig& c, const std::string& k, const std::string& v) { c.MEMBER = ToDouble(k, v); },  \
        [](const PipelineConfig& c) { return Num(c.MEMBER); }                                                \
  }
#define MDD_BOOL(KEY, MEMBER)                                                                                \
  Field {                                                                                                    \
    KEY, [](PipelineConfig& c, const std::string& k, const std::string& v) { c.MEMBER = ToBool(k, v); },    \
        [](const PipelineConfig& c) { return Bool(c.MEMBER); }                                               \
  }
#define MDD_STR(KEY, MEMBER)                                                                                 \
  Field {                                                                                                    \
    KEY, [](PipelineConfig& c, const std::string&, const std::string& v) { c.MEMBER = v; },                 \
        [](const PipelineConfig& c) { return c.MEMBER; }                                                     \
  }

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      Field{"paths.corpus",
            [](PipelineConfig& c, const std::string&, const std::string& v) {
              c.corpus.clear();
              std::string item;
              std::istringstream is(v);
              while (std::getline(is, item, ',')) {
                item = Trim(item);
                if (!item.empty()) c.corpus.push_back(item);
              }
            },
            [](const PipelineConfig& c) { return Join(c.corpus, ","); }},
      MDD_STR("paths.workdir", workdir),
      MDD_STR("paths.alphabet", alphabet),
      MDD_STR("paths.confusion_table", confusion_table),
      Field{"general.seed", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.seed = ToU64(k, v); },
            [](const PipelineConfig& c) { return std::to_string(c.seed); }},
      MDD_INT("general.threads", threads),
      MDD_INT("features.sample_rate", fbank.sample_rate_hz),
      MDD_DBL("features.frame_length_ms", fbank.frame_length_ms),
      MDD_DBL("features.frame_shift_ms", fbank.frame_shift_ms),
      MDD_INT("features.num_mel_bins", fbank.num_mel_bins),
      MDD_DBL("features.low_freq", fbank.low_freq_hz),
      MDD_DBL("features.high_freq", fbank.high_freq_hz),
      MDD_DBL("features.log_floor", fbank.log_floor),
      MDD_BOOL("features.norm_vars", norm_vars),
      Field{"model.variant",
            [](PipelineConfig& c, const std::string&, const std::string& v) { c.model.variant = ParseVariant(v); },
            [](const PipelineConfig& c) { return std::string(VariantName(c.model.variant)); }},
      MDD_INT("model.conv_channels", model.conv_channels),
      MDD_INT("model.rnn_layers", model.rnn_layers),
      MDD_INT("model.rnn_hidden", model.rnn_hidden),
      MDD_INT("model.embed_dim", model.embed_dim),
      MDD_DBL("model.dropout", model.dropout),
      MDD_DBL("model.bn_momentum", model.bn_momentum),
      MDD_DBL("model.bn_eps", model.bn_eps),
      Field{"train.optimizer",
            [](PipelineConfig&, const std::string& k, const std::string& v) {
              if (v != "adam") throw ValidationError(k + ": only 'adam' is available");
            },
            [](const PipelineConfig&) { return std::string("adam"); }},
      MDD_DBL("train.lr", lr),
      MDD_DBL("train.beta1", beta1),
      MDD_DBL("train.beta2", beta2),
      MDD_DBL("train.adam_eps", adam_eps),
      MDD_DBL("train.clip_norm", clip_norm),
      MDD_INT("train.epochs", epochs),
      MDD_INT("train.batch_size", batch_size),
      MDD_DBL("train.stop_at_per", stop_at_per),
      Field{"augment.strategy",
            [](PipelineConfig& c, const std::string&, const std::string& v) { c.augment.strategy = ParseStrategy(v); },
            [](const PipelineConfig& c) { return std::string(StrategyName(c.augment.strategy)); }},
      MDD_DBL("augment.rate", augment.rate),
      MDD_BOOL("augment.freeze", freeze_augmentation),
      MDD_INT("lm.order", lm_order),
      Field{"lm.smoothing",
            [](PipelineConfig& c, const std::string& k, const std::string& v) {
              if (v == "witten_bell") c.lm_smoothing = Smoothing::kWittenBell;
              else if (v == "mle") c.lm_smoothing = Smoothing::kMaximumLikelihood;
              else throw ValidationError(k + ": expected witten_bell or mle");
            },
            [](const PipelineConfig& c) {
              return std::string(c.lm_smoothing == Smoothing::kWittenBell ? "witten_bell" : "mle");
            }},
      MDD_INT("decode.beam", beam),
      MDD_DBL("decode.lm_weight", lm_weight),
      MDD_DBL("decode.insertion_bonus", insertion_bonus),
      MDD_BOOL("decode.use_lm", use_lm),
      MDD_STR("decode.split", decode_split),
  };
  return fields;
}

#undef MDD_INT
#undef MDD_DBL
#undef MDD_BOOL
#undef MDD_STR

const Field* FindField(const std::string& key) {
  for (const auto& f : Fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

}  // namespace

void PipelineConfig::Set(const std::string& dotted_key, const std::string& value) {
  const Field* f = FindField(dotted_key);
  if (!f) throw ValidationError("unknown configuration key '" + dotted_key + "'");
  f->set(*this, dotted_key, Trim(value));
}

std::string PipelineConfig::Get(const std::string& dotted_key) const {
  const Field* f = FindField(dotted_key);
  if (!f) throw ValidationError("unknown configuration key '" + dotted_key + "'");
  return f->get(*this);
}

PipelineConfig PipelineConfig::Parse(const std::string& text) {
  PipelineConfig c;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError("config line " + std::to_string(lineno) + ": bad section header");
      section = Trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    const std::string dotted = section.empty() ? key : section + "." + key;
    try {
      c.Set(dotted, line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

PipelineConfig PipelineConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

std::string PipelineConfig::Dump() const {
  std::string out, section;
  for (const auto& f : Fields()) {
    const std::string key(f.key);
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + f.get(*this) + '\n';
  }
  return out;
}

std::vector<std::string> PipelineConfig::Keys() {
  std::vector<std::string> keys;
  for (const auto& f : Fields()) keys.emplace_back(f.key);
  return keys;
}

void PipelineConfig::Validate() const {
  if (workdir.empty()) throw ValidationError("paths.workdir must be set");
  if (threads < 1) throw ValidationError("general.threads must be at least 1");
  if (fbank.sample_rate_hz <= 0 || fbank.num_mel_bins < 1) throw ValidationError("features: bad filterbank settings");
  if (!(fbank.frame_shift_ms > 0.0 && fbank.frame_length_ms >= fbank.frame_shift_ms)) {
    throw ValidationError("features: frame length must be at least the (positive) frame shift");
  }
  model.Validate();
  if (!(lr >= 0.0)) throw ValidationError("train.lr must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("train: betas in [0, 1)");
  if (!(adam_eps > 0.0)) throw ValidationError("train.adam_eps must be positive");
  if (epochs < 0 || batch_size < 1) throw ValidationError("train: epochs >= 0 and batch_size >= 1 required");
  augment.Validate();
  if (lm_order < 1) throw ValidationError("lm.order must be at least 1");
  if (beam < 1) throw ValidationError("decode.beam must be at least 1");
  if (!(lm_weight >= 0.0)) throw ValidationError("decode.lm_weight must be non-negative");
  if (decode_split != "train" && decode_split != "validation" && decode_split != "test") {
    throw ValidationError("decode.split must be train, validation or test");
  }
}

}  // namespace mdd
