// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/attention.hpp"

namespace dcnmt {

namespace {
constexpr double kMaskedScore = -1e30;
}

AttentionParams::AttentionParams(const std::string& prefix, std::size_t dec_hidden,
                                 std::size_t ann_dim, std::size_t att_dim, std::mt19937_64& rng)
    : W_a(prefix + "/W_a", fan_in_init(att_dim, dec_hidden, rng)),
      U_a(prefix + "/U_a", fan_in_init(att_dim, ann_dim, rng)),
      v_a(prefix + "/v_a", fan_in_init(1, att_dim, rng)) {}

void AttentionParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&W_a);
  out.push_back(&U_a);
  out.push_back(&v_a);
}

AttendResult attend(const Value& s_prev, const Annotations& ann,
                    std::span<const std::vector<double>> slot_masks, AttentionParams& params) {
  if (ann.count() == 0) throw ShapeError("attend: no annotations");
  Tape& tape = *s_prev.tape();
  const std::size_t c = ann.count();
  const std::size_t B = s_prev.cols();

  Value proj_s = matmul(tape.leaf(params.W_a), s_prev);
  std::vector<Value> scores;
  scores.reserve(c);
  for (std::size_t w = 0; w < c; ++w) {
    Value e = matmul(tape.leaf(params.v_a),
                     tanh_op(add(proj_s, matmul(tape.leaf(params.U_a), ann.rows[w]))));
    scores.push_back(e);  // (1, B)
  }
  Value stacked = concat_rows(scores);  // (c, B)

  Tensor mask_add(c, B);
  for (std::size_t w = 0; w < c; ++w)
    for (std::size_t j = 0; j < B; ++j)
      mask_add(w, j) = slot_masks[w][j] == 1.0 ? 0.0 : kMaskedScore;
  Value weights = softmax_columns(add_constant(stacked, mask_add));

  Value context;
  for (std::size_t w = 0; w < c; ++w) {
    Value term = scale_columns(ann.rows[w], slice_rows(weights, w, 1));
    context = w == 0 ? term : add(context, term);
  }
  return {context, weights};
}

DecoderParams::DecoderParams(const std::string& prefix, std::size_t feedback_dim,
                             std::size_t ann_dim, std::size_t hidden, std::size_t att_dim,
                             std::size_t out_dim, std::size_t num_layers, bool use_bias,
                             std::mt19937_64& rng)
    : f0(prefix + "/f0", uniform_init(feedback_dim, 1, 0.1, rng)),
      att(prefix + "/att", hidden, ann_dim, att_dim, rng),
      W_ds(prefix + "/W_ds", fan_in_init(out_dim, hidden, rng)),
      W_dc(prefix + "/W_dc", fan_in_init(out_dim, ann_dim, rng)),
      W_df(prefix + "/W_df", fan_in_init(out_dim, feedback_dim, rng)),
      b_d(prefix + "/b_d", Tensor::col_vector(out_dim)),
      use_bias(use_bias),
      hidden(hidden),
      out_dim(out_dim) {
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::string lp = prefix + "/l" + std::to_string(l);
    std::size_t in = l == 0 ? feedback_dim + ann_dim : hidden;
    layers.emplace_back(lp, in, hidden, use_bias, rng);
    W_init.emplace_back(lp + "/W_init", fan_in_init(hidden, ann_dim / 2, rng));
  }
}

void DecoderParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&f0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].collect(out);
    out.push_back(&W_init[l]);
  }
  att.collect(out);
  out.push_back(&W_ds);
  out.push_back(&W_dc);
  out.push_back(&W_df);
  if (use_bias) out.push_back(&b_d);
}

std::vector<Value> decoder_init(Tape& tape, const Annotations& ann, DecoderParams& params) {
  std::vector<Value> s;
  for (std::size_t l = 0; l < params.layers.size(); ++l)
    s.push_back(tanh_op(matmul(tape.leaf(params.W_init[l]), ann.bwd_rows[0])));
  return s;
}

DecoderStepResult decoder_step(const Value& feedback, std::span<const Value> s_prev,
                               const Annotations& ann,
                               std::span<const std::vector<double>> slot_masks,
                               DecoderParams& params) {
  Tape& tape = *feedback.tape();
  const std::size_t L = params.layers.size();

  AttendResult att = attend(s_prev[L - 1], ann, slot_masks, params.att);

  DecoderStepResult out;
  Value parts[] = {feedback, att.context};
  Value x = concat_rows(parts);
  for (std::size_t l = 0; l < L; ++l) {
    out.s.push_back(gru_core(params.layers[l], x, s_prev[l]));
    x = out.s[l];
  }

  Value d = add(add(matmul(tape.leaf(params.W_ds), out.s[L - 1]),
                    matmul(tape.leaf(params.W_dc), att.context)),
                matmul(tape.leaf(params.W_df), feedback));
  if (params.use_bias) d = add_bias(d, tape.leaf(params.b_d));
  out.d = d;
  out.context = att.context;
  out.attention_weights = att.weights;
  return out;
}

}  // namespace dcnmt
