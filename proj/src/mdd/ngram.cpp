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

#include "mdd/ngram.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mdd {

namespace {

constexpr double kArpaZero = -99.0;

double Log10OrZero(double p) { return p > 0.0 ? std::log10(p) : kNegInf; }

std::string FormatLog(double v) {
  if (v == kNegInf) v = kArpaZero;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.8f", v);
  return buf;
}

std::vector<std::string> Vocabulary(const PhonemeAlphabet& alphabet) {
  std::vector<std::string> words;
  for (int i = 0; i < alphabet.size(); ++i) words.push_back(alphabet.symbol(i));
  words.emplace_back("<s>");
  words.emplace_back("</s>");
  return words;
}

}  // namespace

NGramModel NGramModel::Train(const std::vector<std::vector<PhonemeId>>& corpus, int order,
                             const PhonemeAlphabet& alphabet, Smoothing smoothing) {
  if (order < 1) throw ValidationError("n-gram order must be at least 1");
  if (corpus.empty()) throw ValidationError("cannot train a language model on an empty corpus");
  NGramModel m;
  m.order_ = order;
  m.words_ = Vocabulary(alphabet);
  m.grams_.resize(static_cast<std::size_t>(order));
  const int bos = m.bos();
  const int eos = m.eos();
  const bool mle = smoothing == Smoothing::kMaximumLikelihood;

  // counts[n-1][gram] for every gram of length n.
  std::vector<std::map<Gram, double>> counts(static_cast<std::size_t>(order));
  for (auto& sent : corpus) {
    CheckSequence(alphabet, sent);
    Gram toks;
    toks.push_back(bos);
    toks.insert(toks.end(), sent.begin(), sent.end());
    toks.push_back(eos);
    for (std::size_t i = 1; i < toks.size(); ++i) {
      for (int n = 1; n <= order; ++n) {
        if (static_cast<std::size_t>(n) > i + 1) break;
        if (n == 1 && mle && toks[i] == eos) continue;
        Gram g(toks.begin() + static_cast<std::ptrdiff_t>(i + 1 - n), toks.begin() + static_cast<std::ptrdiff_t>(i + 1));
        counts[static_cast<std::size_t>(n - 1)][g] += 1.0;
      }
    }
  }

  // Predictable words: every phoneme and </s>; <s> is context only.
  const int predictable = m.vocab_size() - 1;

  // Unigrams.
  {
    auto& uni = counts[0];
    double total = 0.0;
    for (auto& [g, c] : uni) total += c;
    if (total <= 0.0) throw ValidationError("language model corpus has no tokens");
    const double types = static_cast<double>(uni.size());
    auto& table = m.grams_[0];
    for (int w = 0; w < m.vocab_size(); ++w) {
      if (w == bos) continue;
      if (mle && w == eos) continue;
      double c = uni.count(Gram{w}) ? uni.at(Gram{w}) : 0.0;
      double p = mle ? c / total : (c + types / predictable) / (total + types);
      table[Gram{w}].log10_prob = Log10OrZero(p);
    }
    table[Gram{bos}].log10_prob = kArpaZero;
  }

  for (int n = 2; n <= order; ++n) {
    // Group n-gram counts by history.
    std::map<Gram, std::vector<std::pair<int, double>>> by_hist;
    for (auto& [g, c] : counts[static_cast<std::size_t>(n - 1)]) {
      Gram h(g.begin(), g.end() - 1);
      by_hist[h].emplace_back(g.back(), c);
    }
    auto& table = m.grams_[static_cast<std::size_t>(n - 1)];
    auto& lower = m.grams_[static_cast<std::size_t>(n - 2)];
    for (auto& [h, conts] : by_hist) {
      double c_h = 0.0;
      for (auto& [w, c] : conts) c_h += c;
      const double types = static_cast<double>(conts.size());
      Gram shorter(h.begin() + 1, h.end());
      for (auto& [w, c] : conts) {
        double p_lower = std::pow(10.0, m.Score(shorter, w));
        double p = mle ? c / c_h : (c + types * p_lower) / (c_h + types);
        Gram g = h;
        g.push_back(w);
        table[g].log10_prob = Log10OrZero(p);
      }
      // Interpolated Witten-Bell: the mass left for unseen words is
      // T/(c+T), already proportional to the lower-order distribution.
      // History grams always exist at the lower order (same counting pass).
      double bow = mle ? 0.0 : types / (c_h + types);
      lower[h].log10_backoff = Log10OrZero(bow);
    }
  }
  return m;
}

double NGramModel::Score(const Gram& history_in, int next) const {
  if (next < 0 || next >= vocab_size()) throw ValidationError("n-gram: word id out of vocabulary");
  Gram history = history_in;
  const auto max_hist = static_cast<std::size_t>(order_ - 1);
  if (history.size() > max_hist) history.erase(history.begin(), history.end() - static_cast<std::ptrdiff_t>(max_hist));
  double backoff = 0.0;
  while (true) {
    Gram g = history;
    g.push_back(next);
    auto& table = grams_[history.size()];
    auto it = table.find(g);
    if (it != table.end()) return backoff + it->second.log10_prob;
    if (history.empty()) return kNegInf;
    auto& hist_table = grams_[history.size() - 1];
    auto h = hist_table.find(history);
    if (h != hist_table.end() && h->second.log10_backoff) backoff += *h->second.log10_backoff;
    history.erase(history.begin());
  }
}

double NGramModel::DistributionSum(const Gram& history) const {
  double s = 0.0;
  for (int w = 0; w < vocab_size(); ++w) {
    if (w == bos()) continue;
    s += std::pow(10.0, Score(history, w));
  }
  return s;
}

double NGramModel::Perplexity(const std::vector<std::vector<PhonemeId>>& corpus) const {
  double log10_sum = 0.0;
  std::size_t tokens = 0;
  for (auto& sent : corpus) {
    Gram hist{bos()};
    for (PhonemeId p : sent) {
      log10_sum += Score(hist, p);
      hist.push_back(p);
      ++tokens;
    }
    log10_sum += Score(hist, eos());
    ++tokens;
  }
  if (tokens == 0) throw ValidationError("perplexity of an empty corpus");
  return std::pow(10.0, -log10_sum / static_cast<double>(tokens));
}

std::string NGramModel::WriteArpa() const {
  std::ostringstream os;
  os << "\\data\\\n";
  for (int n = 1; n <= order_; ++n) os << "ngram " << n << "=" << grams(n).size() << "\n";
  for (int n = 1; n <= order_; ++n) {
    os << "\n\\" << n << "-grams:\n";
    for (auto& [g, e] : grams(n)) {
      os << FormatLog(e.log10_prob);
      for (std::size_t i = 0; i < g.size(); ++i) os << (i ? " " : "\t") << word(g[i]);
      if (n < order_ && e.log10_backoff) os << "\t" << FormatLog(*e.log10_backoff);
      os << "\n";
    }
  }
  os << "\n\\end\\\n";
  return os.str();
}

void NGramModel::SaveArpa(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write " + path);
  out << WriteArpa();
}

NGramModel NGramModel::ReadArpa(const std::string& text, const PhonemeAlphabet& alphabet) {
  NGramModel m;
  m.words_ = Vocabulary(alphabet);
  std::unordered_map<std::string, int> ids;
  for (int i = 0; i < m.vocab_size(); ++i) ids[m.words_[static_cast<std::size_t>(i)]] = i;
  auto word_id = [&](const std::string& w, int line_no) {
    auto it = ids.find(w);
    if (it != ids.end()) return it->second;
    auto p = alphabet.Find(w);
    if (p) return static_cast<int>(*p);
    throw ValidationError("ARPA line " + std::to_string(line_no) + ": word '" + w + "' not in phoneme alphabet");
  };

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  enum class Section { kPreamble, kData, kGrams, kEnd } section = Section::kPreamble;
  std::map<int, std::size_t> declared;
  int current = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = Trim(line);
    if (t.empty()) continue;
    if (t == "\\data\\") {
      if (section != Section::kPreamble) throw ValidationError("ARPA: duplicate \\data\\ section");
      section = Section::kData;
      continue;
    }
    if (t == "\\end\\") {
      if (section == Section::kPreamble) throw ValidationError("ARPA: \\end\\ before \\data\\");
      section = Section::kEnd;
      break;
    }
    if (t.front() == '\\') {
      int n = 0;
      char tail[16] = {};
      if (std::sscanf(t.c_str(), "\\%d-grams%15s", &n, tail) < 1 || std::string(tail) != ":" || !declared.count(n)) {
        throw ValidationError("ARPA line " + std::to_string(line_no) + ": malformed section header '" + t + "'");
      }
      current = n;
      section = Section::kGrams;
      continue;
    }
    if (section == Section::kPreamble) continue;
    if (section == Section::kData) {
      int n = 0;
      unsigned long long c = 0;
      if (std::sscanf(t.c_str(), "ngram %d=%llu", &n, &c) != 2 || n < 1) {
        throw ValidationError("ARPA line " + std::to_string(line_no) + ": malformed count line");
      }
      declared[n] = static_cast<std::size_t>(c);
      continue;
    }
    auto f = SplitWhitespace(t);
    if (f.size() != static_cast<std::size_t>(current) + 1 && f.size() != static_cast<std::size_t>(current) + 2) {
      throw ValidationError("ARPA line " + std::to_string(line_no) + ": expected " + std::to_string(current) +
                            "-gram entry");
    }
    if (static_cast<int>(m.grams_.size()) < current) m.grams_.resize(static_cast<std::size_t>(current));
    Gram g;
    for (int i = 0; i < current; ++i) g.push_back(word_id(f[static_cast<std::size_t>(i) + 1], line_no));
    Entry e;
    try {
      e.log10_prob = std::stod(f[0]);
      if (f.size() == static_cast<std::size_t>(current) + 2) e.log10_backoff = std::stod(f.back());
    } catch (const std::exception&) {
      throw ValidationError("ARPA line " + std::to_string(line_no) + ": bad number");
    }
    if (!m.grams_[static_cast<std::size_t>(current - 1)].emplace(g, e).second) {
      throw ValidationError("ARPA line " + std::to_string(line_no) + ": duplicate n-gram");
    }
  }
  if (section != Section::kEnd) throw ValidationError("ARPA: missing \\end\\ marker");
  if (declared.empty()) throw ValidationError("ARPA: no ngram counts declared");
  m.order_ = declared.rbegin()->first;
  m.grams_.resize(static_cast<std::size_t>(m.order_));
  for (auto& [n, c] : declared) {
    if (n > m.order_ || m.grams_[static_cast<std::size_t>(n - 1)].size() != c) {
      throw ValidationError("ARPA: declared " + std::to_string(c) + " " + std::to_string(n) + "-grams, found " +
                            std::to_string(n <= m.order_ ? m.grams_[static_cast<std::size_t>(n - 1)].size() : 0));
    }
  }
  return m;
}

NGramModel NGramModel::LoadArpa(const std::string& path, const PhonemeAlphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ARPA file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ReadArpa(ss.str(), alphabet);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

double NGramScorer::LogProb(std::span<const PhonemeId> history, PhonemeId next) const {
  NGramModel::Gram h;
  h.push_back(lm_.bos());
  h.insert(h.end(), history.begin(), history.end());
  int w = next == kEndOfSentence ? lm_.eos() : static_cast<int>(next);
  return lm_.Score(h, w) * std::log(10.0);
}

}  // namespace mdd
