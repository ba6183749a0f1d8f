// SPDX-License-Identifier: Apache-2.0
//
// GRU cell parameters and the three step variants used by the model:
//
//   gru_core   r = sigmoid(W_r x + U_r h)          (reset gate)
//              z = sigmoid(W_z x + U_z h)          (update gate)
//              g = tanh(W x + U (r o h))           (candidate)
//              out = z o h + (1 - z) o g
//
//   dgru_step  gru_core, then the state is reset to the trainable initial
//              state h0 wherever the delimiter flag is 1.
//
//   igru_step  the previous state is overridden by the decoded vector d
//              wherever the previous flag is 1, then gru_core.
//
// Flag blends use exact {0,1} arithmetic, so a reset state equals h0 exactly.

#pragma once

#include "dcnmt/tensor.hpp"

namespace dcnmt {

struct GruParams {
  GruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden, bool use_bias,
            std::mt19937_64& rng);

  Parameter W_r, U_r, W_z, U_z, W, U;
  Parameter b_r, b_z, b;  // present only when use_bias
  bool use_bias;
  std::size_t input_dim;
  std::size_t hidden;

  void collect(std::vector<Parameter*>& out);
};

// out = flags[k]==0 ? when0(:,k) : when1(:,k), exact for {0,1} flags.
Value flag_lerp(std::span<const double> flags, const Value& when0, const Value& when1);

Value gru_core(GruParams& p, const Value& x, const Value& h_prev);

// h0 must already be broadcast to the batch width of x.
Value dgru_step(GruParams& p, const Value& x_emb, const Value& h_prev,
                std::span<const double> a_t, const Value& h0);

// d_it is the decoded vector for each column's current word.
Value igru_step(GruParams& p, const Value& y_prev_emb, const Value& h_prev,
                std::span<const double> a_prev, const Value& d_it);

}  // namespace dcnmt
