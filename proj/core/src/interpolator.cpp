// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/interpolator.hpp"

#include <algorithm>

namespace dcnmt {

ResamplingMatrix build_resampling_matrix(std::span<const int> aux) {
  if (aux.empty()) throw DataError("build_resampling_matrix: empty auxiliary sequence");
  if (aux.back() != 1)
    throw DataError("build_resampling_matrix: sequence not delimiter-terminated");
  ResamplingMatrix r;
  r.cols = aux.size();
  int start = 0;
  for (std::size_t t = 0; t < aux.size(); ++t) {
    r.word_of.push_back(static_cast<int>(r.spans.size()));
    if (aux[t] == 1) {
      r.spans.emplace_back(start, static_cast<int>(t) + 1);
      start = static_cast<int>(t) + 1;
    }
  }
  r.rows = r.spans.size();
  return r;
}

OutputProjection::OutputProjection(const std::string& prefix, std::size_t vocab,
                                   std::size_t hidden, std::mt19937_64& rng)
    : W_o(prefix + "/W_o", fan_in_init(vocab, hidden, rng)),
      b_o(prefix + "/b_o", Tensor::col_vector(vocab)) {}

void OutputProjection::collect(std::vector<Parameter*>& out) {
  out.push_back(&W_o);
  out.push_back(&b_o);
}

Value char_logits(const Value& h, OutputProjection& proj) {
  Tape& tape = *h.tape();
  return softmax_columns(add_bias(matmul(tape.leaf(proj.W_o), h), tape.leaf(proj.b_o)));
}

InterpolationResult interpolate_training(Tape& tape, const Batch& tgt,
                                         std::span<const Value> d_slots, EmbeddingTable& emb,
                                         GruParams& igru, OutputProjection& proj, int go_id,
                                         double sample_prob, std::uint64_t sample_seed) {
  const std::size_t B = tgt.size;
  const std::size_t T = tgt.max_len;
  if (d_slots.empty()) throw ShapeError("interpolate_training: no decoded vectors");

  InterpolationResult out;
  Value h = tape.constant(Tensor(igru.hidden, B));  // overridden at t=0 (a_0 = 1)

  std::mt19937_64 sample_rng(sample_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Value prev_logp;  // last step's log-probabilities

  // word index per column: number of boundaries among y_1..y_{t-1}
  std::vector<int> word_idx(B, 0);

  for (std::size_t t = 0; t < T; ++t) {
    std::vector<int> y_prev(B);
    std::vector<double> a_prev(B);
    if (t == 0) {
      std::fill(y_prev.begin(), y_prev.end(), go_id);
      std::fill(a_prev.begin(), a_prev.end(), 1.0);
    } else {
      auto prev_ids = tgt.ids_at(t - 1);
      auto prev_aux = tgt.aux_at(t - 1);
      auto prev_mask = tgt.mask_at(t - 1);
      for (std::size_t j = 0; j < B; ++j) {
        y_prev[j] = prev_ids[j];
        a_prev[j] = prev_aux[j];
        if (prev_aux[j] == 1.0) ++word_idx[j];
      }
      if (sample_prob > 0.0 && prev_logp.defined()) {
        const Tensor& lp = prev_logp.val();
        for (std::size_t j = 0; j < B; ++j) {
          bool replace = unif(sample_rng) < sample_prob;  // drawn for every column
          if (!replace || prev_mask[j] != 1.0) continue;
          std::size_t best = 0;
          for (std::size_t r = 1; r < lp.rows(); ++r)
            if (lp(r, j) > lp(best, j)) best = r;
          y_prev[j] = static_cast<int>(best);
        }
      }
    }

    std::vector<int> which(B);
    for (std::size_t j = 0; j < B; ++j)
      which[j] = std::min(word_idx[j], static_cast<int>(d_slots.size()) - 1);
    Value d_it = pick_time_per_column(d_slots, which);

    Value y_emb = embedding_lookup(tape, emb, y_prev);
    h = igru_step(igru, y_emb, h, a_prev, d_it);
    out.states.push_back(h);

    Value logp = log_softmax_columns(
        add_bias(matmul(tape.leaf(proj.W_o), h), tape.leaf(proj.b_o)));
    Value picked = pick_per_column(logp, tgt.ids_at(t));
    out.step_logp.push_back(scale_columns_const(picked, tgt.mask_at(t)));
    prev_logp = logp;
  }
  return out;
}

}  // namespace dcnmt
