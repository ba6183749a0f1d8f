// SPDX-License-Identifier: Apache-2.0
//
// Soft attention over annotations and the word-level decoder recurrence. One
// decoder step consumes the previous word's summary feedback, attends over
// the source annotations and emits the decoded vector d for the next word.

#pragma once

#include "dcnmt/encoder.hpp"

namespace dcnmt {

struct AttentionParams {
  AttentionParams(const std::string& prefix, std::size_t dec_hidden, std::size_t ann_dim,
                  std::size_t att_dim, std::mt19937_64& rng);

  Parameter W_a;  // (att_dim, dec_hidden)
  Parameter U_a;  // (att_dim, ann_dim)
  Parameter v_a;  // (1, att_dim)

  void collect(std::vector<Parameter*>& out);
};

struct AttendResult {
  Value context;  // (ann_dim, batch)
  Value weights;  // (c, batch), columns sum to 1 over real slots
};

// slot_masks gates padded word slots out of the softmax.
AttendResult attend(const Value& s_prev, const Annotations& ann,
                    std::span<const std::vector<double>> slot_masks, AttentionParams& params);

struct DecoderParams {
  DecoderParams(const std::string& prefix, std::size_t feedback_dim, std::size_t ann_dim,
                std::size_t hidden, std::size_t att_dim, std::size_t out_dim,
                std::size_t num_layers, bool use_bias, std::mt19937_64& rng);

  std::vector<GruParams> layers;  // layer 0 reads concat(feedback, context)
  std::vector<Parameter> W_init;  // s_0 = tanh(W_init . first backward annotation), per layer
  Parameter f0;                   // trainable initial feedback, (feedback_dim, 1)
  AttentionParams att;
  Parameter W_ds, W_dc, W_df, b_d;  // readout d = W_ds s + W_dc ctx + W_df fb + b_d
  bool use_bias;
  std::size_t hidden;
  std::size_t out_dim;

  void collect(std::vector<Parameter*>& out);
};

// s_0 per layer from the backward annotation of the first word.
std::vector<Value> decoder_init(Tape& tape, const Annotations& ann, DecoderParams& params);

struct DecoderStepResult {
  Value d;                   // decoded vector, (out_dim, batch)
  std::vector<Value> s;      // next state per layer
  Value context;
  Value attention_weights;
};

DecoderStepResult decoder_step(const Value& feedback, std::span<const Value> s_prev,
                               const Annotations& ann,
                               std::span<const std::vector<double>> slot_masks,
                               DecoderParams& params);

}  // namespace dcnmt
