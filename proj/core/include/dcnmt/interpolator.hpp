// SPDX-License-Identifier: Apache-2.0
//
// State-settable GRU that expands per-word decoded vectors back into a
// character sequence, plus the per-character output softmax. The resampling
// matrix unfolds decoder outputs so every character position of word i sees
// the same decoded vector d_i.

#pragma once

#include "dcnmt/cells.hpp"
#include "dcnmt/text_pipeline.hpp"

namespace dcnmt {

// 0/1 matrix of shape (c, t); row i is 1 across the character span of word i.
struct ResamplingMatrix {
  std::size_t rows = 0;          // c
  std::size_t cols = 0;          // t
  std::vector<std::pair<int, int>> spans;  // [start, end) column range per word
  std::vector<int> word_of;      // word index per character position
};

// aux must be non-empty and end with 1.
ResamplingMatrix build_resampling_matrix(std::span<const int> aux);

struct OutputProjection {
  OutputProjection(const std::string& prefix, std::size_t vocab, std::size_t hidden,
                   std::mt19937_64& rng);

  Parameter W_o;  // (vocab, hidden)
  Parameter b_o;  // (vocab, 1)

  void collect(std::vector<Parameter*>& out);
};

// softmax(W_o h + b_o), shape (vocab, batch); strictly positive columns
// summing to 1.
Value char_logits(const Value& h, OutputProjection& proj);

struct InterpolationResult {
  // log p(y_t) picked at the ground-truth ids, one (1, batch) row per
  // character step; padded positions already masked to 0.
  std::vector<Value> step_logp;
  // states after each character step, (hidden, batch)
  std::vector<Value> states;
};

// Teacher-forced pass over a target batch. d_slots[w] is the decoded vector
// for word slot w, shape (igru hidden, batch). Word indices past an element's
// word count are clamped; those positions carry mask 0.
//
// sample_prob > 0 replaces each non-initial y_{t-1} input by the model's own
// argmax prediction with that probability (delimiter structure and targets
// stay teacher-forced); draws are a pure function of sample_seed.
InterpolationResult interpolate_training(Tape& tape, const Batch& tgt,
                                         std::span<const Value> d_slots, EmbeddingTable& emb,
                                         GruParams& igru, OutputProjection& proj, int go_id,
                                         double sample_prob = 0.0,
                                         std::uint64_t sample_seed = 0);

}  // namespace dcnmt
