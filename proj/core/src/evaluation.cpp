// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dcnmt {

namespace {

std::vector<std::string> tokenize_lower(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(normalize(line));
  std::string tok;
  while (in >> tok) {
    for (char& c : tok)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    tokens.push_back(tok);
  }
  return tokens;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

}  // namespace

BleuReport bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                int max_n, bool smooth) {
  if (hypotheses.size() != references.size())
    throw DataError("bleu: hypothesis and reference line counts differ");
  if (hypotheses.empty()) throw DataError("bleu: empty corpus");

  std::vector<std::size_t> clipped(max_n, 0), total(max_n, 0);
  BleuReport report;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    auto hyp = tokenize_lower(hypotheses[i]);
    auto ref = tokenize_lower(references[i]);
    report.hypothesis_length += hyp.size();
    report.reference_length += ref.size();
    for (int n = 1; n <= max_n; ++n) {
      NgramCounts hc = count_ngrams(hyp, n);
      NgramCounts rc = count_ngrams(ref, n);
      for (const auto& [gram, count] : hc) {
        total[n - 1] += count;
        auto it = rc.find(gram);
        if (it != rc.end()) clipped[n - 1] += std::min(count, it->second);
      }
    }
  }

  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < max_n; ++n) {
    double num = static_cast<double>(clipped[n]);
    double den = static_cast<double>(total[n]);
    if (smooth) {
      num += 1.0;
      den += 1.0;
    }
    // An order with no hypothesis n-grams at all (every line shorter than n)
    // is neutral: p = 1, so bleu(h, h) stays exactly 1 on short corpora.
    double p = den > 0.0 ? num / den : 1.0;
    report.precisions.push_back(p);
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
  }

  report.brevity_penalty =
      report.hypothesis_length >= report.reference_length || report.hypothesis_length == 0
          ? (report.hypothesis_length == 0 ? 0.0 : 1.0)
          : std::exp(1.0 - static_cast<double>(report.reference_length) /
                               static_cast<double>(report.hypothesis_length));
  report.bleu = zero ? 0.0 : report.brevity_penalty * std::exp(log_sum / max_n);
  return report;
}

Tensor word_summary(Model& model, const std::string& word) {
  Tape tape;
  EncodedSequence seq = encode(word, model.src_vocab);
  std::vector<Value> summaries =
      decimate_sentence(tape, seq, model.src_emb, model.src_dec, model.src_vocab);
  return summaries[0].val();
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("cosine_similarity: shape mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

MisspellingReport misspelling_probe(Model& model,
                                    std::span<const std::pair<std::string, std::string>> pairs,
                                    std::uint64_t seed) {
  if (pairs.empty()) throw DataError("misspelling_probe: no word pairs");
  MisspellingReport report;

  std::vector<std::string> words;
  for (const auto& [w, p] : pairs) {
    words.push_back(w);
    words.push_back(p);
  }
  std::map<std::string, Tensor> cache;
  for (const std::string& w : words)
    if (!cache.count(w)) cache.emplace(w, word_summary(model, w));

  for (const auto& [w, p] : pairs)
    report.pair_cosines.push_back(cosine_similarity(cache.at(w), cache.at(p)));
  for (double c : report.pair_cosines) report.mean_pair_cosine += c;
  report.mean_pair_cosine /= static_cast<double>(report.pair_cosines.size());

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  double sum = 0.0;
  const std::size_t draws = pairs.size();
  for (std::size_t i = 0; i < draws; ++i) {
    std::size_t a = pick(rng), b = pick(rng);
    while (b == a) b = pick(rng);
    sum += cosine_similarity(cache.at(words[a]), cache.at(words[b]));
  }
  report.mean_random_cosine = sum / static_cast<double>(draws);
  return report;
}

void export_embeddings(Model& model, std::span<const std::string> words,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open embedding dump for writing: " + path);
  for (const std::string& word : words) {
    EncodedSequence seq = encode(word, model.src_vocab);
    out << decode(seq.ids, model.src_vocab);  // unk substitution is visible in the word field
    Tensor v = word_summary(model, word);
    char buf[32];
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", v[i]);
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing embedding dump: " + path);
}

}  // namespace dcnmt
