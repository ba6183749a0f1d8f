// SPDX-License-Identifier: Apache-2.0
//
// Delimiter-reset GRU over characters plus the sampling step that picks the
// state immediately before each delimiter as that word's summary vector.

#pragma once

#include "dcnmt/cells.hpp"
#include "dcnmt/text_pipeline.hpp"

namespace dcnmt {

// One-hot column matrix selecting word summaries from the state sequence
// h_1..h_t. pick_index[j] is the 0-based row of the 1 in column j: the
// position of the j-th delimiter minus one. -1 selects the virtual initial
// state h0 (empty word).
struct SamplingMatrix {
  std::size_t rows = 0;  // t
  std::size_t cols = 0;  // c, number of words
  std::vector<int> pick_index;
};

// aux must be non-empty and end with 1.
SamplingMatrix build_sampling_matrix(std::span<const int> aux);

struct DecimatorParams {
  DecimatorParams(const std::string& prefix, std::size_t embed_dim, std::size_t hidden,
                  std::size_t num_layers, bool use_bias, std::mt19937_64& rng);

  std::vector<GruParams> layers;  // layer 0 reads embeddings, layer l>0 reads layer l-1 states
  std::vector<Parameter> h0;      // trainable initial state per layer, (hidden, 1)
  std::size_t hidden;

  void collect(std::vector<Parameter*>& out);
};

struct DecimateResult {
  // summaries[w] has shape (hidden, batch); columns of batch elements with
  // fewer than w+1 words are zero.
  std::vector<Value> summaries;
  // top-layer states per time step, (hidden, batch); kept for inspection
  std::vector<Value> states;
  std::vector<int> word_counts;  // per batch element
  std::size_t max_words = 0;

  // 1.0 where slot w is a real word of that element, 0.0 beyond
  std::vector<double> slot_mask(std::size_t w) const;
};

DecimateResult decimate(Tape& tape, const Batch& batch, EmbeddingTable& emb,
                        DecimatorParams& params);

// Single-sequence convenience; returns word_count summaries of shape (hidden, 1).
std::vector<Value> decimate_sentence(Tape& tape, const EncodedSequence& seq, EmbeddingTable& emb,
                                     DecimatorParams& params, const CharVocab& vocab);

}  // namespace dcnmt
