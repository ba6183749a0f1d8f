// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/encoder.hpp"

namespace dcnmt {

EncoderParams::EncoderParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                             std::size_t num_layers, bool use_bias, std::mt19937_64& rng)
    : hidden(hidden) {
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::string lp = prefix + "/l" + std::to_string(l);
    std::size_t in = l == 0 ? input_dim : 2 * hidden;
    fwd.emplace_back(lp + "/fwd", in, hidden, use_bias, rng);
    bwd.emplace_back(lp + "/bwd", in, hidden, use_bias, rng);
    h0f.emplace_back(lp + "/fwd/h0", uniform_init(hidden, 1, 0.1, rng));
    h0b.emplace_back(lp + "/bwd/h0", uniform_init(hidden, 1, 0.1, rng));
  }
}

void EncoderParams::collect(std::vector<Parameter*>& out) {
  for (std::size_t l = 0; l < fwd.size(); ++l) {
    fwd[l].collect(out);
    out.push_back(&h0f[l]);
    bwd[l].collect(out);
    out.push_back(&h0b[l]);
  }
}

Annotations encode_words(Tape& tape, std::span<const Value> summaries,
                         std::span<const std::vector<double>> slot_masks, EncoderParams& params) {
  if (summaries.empty()) throw ShapeError("encode_words: no word summaries");
  const std::size_t c = summaries.size();
  const std::size_t B = summaries[0].cols();
  const std::size_t L = params.fwd.size();

  std::vector<Value> inputs(summaries.begin(), summaries.end());
  std::vector<Value> f(c), g(c);
  for (std::size_t l = 0; l < L; ++l) {
    Value hf = broadcast_column(tape.leaf(params.h0f[l]), B);
    for (std::size_t w = 0; w < c; ++w) {
      Value next = gru_core(params.fwd[l], inputs[w], hf);
      hf = flag_lerp(slot_masks[w], hf, next);
      f[w] = hf;
    }
    Value hb = broadcast_column(tape.leaf(params.h0b[l]), B);
    for (std::size_t w = c; w-- > 0;) {
      Value next = gru_core(params.bwd[l], inputs[w], hb);
      hb = flag_lerp(slot_masks[w], hb, next);
      g[w] = hb;
    }
    for (std::size_t w = 0; w < c; ++w) {
      Value parts[] = {f[w], g[w]};
      inputs[w] = concat_rows(parts);
    }
  }

  Annotations ann;
  ann.rows = inputs;
  ann.bwd_rows = g;
  return ann;
}

}  // namespace dcnmt
