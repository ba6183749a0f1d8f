// SPDX-License-Identifier: Apache-2.0
//
// Bidirectional GRU over word summaries. Each word position gets an
// annotation: the forward and backward states concatenated.

#pragma once

#include "dcnmt/cells.hpp"

namespace dcnmt {

struct EncoderParams {
  EncoderParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                std::size_t num_layers, bool use_bias, std::mt19937_64& rng);

  std::vector<GruParams> fwd, bwd;  // layer l>0 reads layer l-1 annotations (2*hidden wide)
  std::vector<Parameter> h0f, h0b;  // trainable initial states
  std::size_t hidden;

  void collect(std::vector<Parameter*>& out);
};

struct Annotations {
  std::vector<Value> rows;      // per word slot, shape (2*hidden, batch)
  std::vector<Value> bwd_rows;  // backward half only, (hidden, batch)
  std::size_t count() const { return rows.size(); }
};

// slot_masks[w][j] is 1 while slot w is a real word of element j. Masked
// positions keep the running state, so real annotations are unaffected by
// padded slots in either direction.
Annotations encode_words(Tape& tape, std::span<const Value> summaries,
                         std::span<const std::vector<double>> slot_masks, EncoderParams& params);

}  // namespace dcnmt
