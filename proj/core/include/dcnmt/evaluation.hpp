// SPDX-License-Identifier: Apache-2.0
//
// Corpus BLEU (uncased, whitespace-tokenized, clipped modified n-gram
// precision with brevity penalty), a misspelling-robustness probe over
// decimator word summaries, and a word-embedding dump.

#pragma once

#include "dcnmt/model.hpp"

namespace dcnmt {

struct BleuReport {
  double bleu = 0.0;               // in [0, 1]
  std::vector<double> precisions;  // p_1..p_max_n
  double brevity_penalty = 1.0;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
};

// One hypothesis/reference pair per line; counts must match. Without
// smoothing any zero n-gram precision makes the score 0; with smoothing,
// counts get add-one smoothing for tiny corpora. An order the hypothesis
// corpus has no n-grams of is neutral (p = 1), never zero.
BleuReport bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                int max_n = 4, bool smooth = false);

// Source-decimator summary of a single word, shape (dgru_hidden, 1).
Tensor word_summary(Model& model, const std::string& word);

double cosine_similarity(const Tensor& a, const Tensor& b);

struct MisspellingReport {
  double mean_pair_cosine = 0.0;    // over the given (word, perturbed) pairs
  double mean_random_cosine = 0.0;  // over random pairs drawn from the same words
  std::vector<double> pair_cosines;
};

MisspellingReport misspelling_probe(Model& model,
                                    std::span<const std::pair<std::string, std::string>> pairs,
                                    std::uint64_t seed = 1);

// One line per word: `word<TAB>v1<TAB>v2...`, 9 significant digits.
// Out-of-vocabulary characters are unk-substituted and render as U+FFFD in
// the word field.
void export_embeddings(Model& model, std::span<const std::string> words, const std::string& path);

}  // namespace dcnmt
