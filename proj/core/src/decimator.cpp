// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/decimator.hpp"

#include <algorithm>

namespace dcnmt {

SamplingMatrix build_sampling_matrix(std::span<const int> aux) {
  if (aux.empty()) throw DataError("build_sampling_matrix: empty auxiliary sequence");
  if (aux.back() != 1) throw DataError("build_sampling_matrix: sequence not delimiter-terminated");
  SamplingMatrix s;
  s.rows = aux.size();
  for (std::size_t i = 0; i < aux.size(); ++i)
    if (aux[i] == 1) s.pick_index.push_back(static_cast<int>(i) - 1);
  s.cols = s.pick_index.size();
  return s;
}

DecimatorParams::DecimatorParams(const std::string& prefix, std::size_t embed_dim,
                                 std::size_t hidden, std::size_t num_layers, bool use_bias,
                                 std::mt19937_64& rng)
    : hidden(hidden) {
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::string lp = prefix + "/l" + std::to_string(l);
    layers.emplace_back(lp, l == 0 ? embed_dim : hidden, hidden, use_bias, rng);
    h0.emplace_back(lp + "/h0", uniform_init(hidden, 1, 0.1, rng));
  }
}

void DecimatorParams::collect(std::vector<Parameter*>& out) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].collect(out);
    out.push_back(&h0[l]);
  }
}

std::vector<double> DecimateResult::slot_mask(std::size_t w) const {
  std::vector<double> m(word_counts.size());
  for (std::size_t j = 0; j < word_counts.size(); ++j)
    m[j] = w < static_cast<std::size_t>(word_counts[j]) ? 1.0 : 0.0;
  return m;
}

DecimateResult decimate(Tape& tape, const Batch& batch, EmbeddingTable& emb,
                        DecimatorParams& params) {
  const std::size_t B = batch.size;
  const std::size_t L = params.layers.size();

  std::vector<Value> h0bc(L);
  std::vector<Value> h(L);
  for (std::size_t l = 0; l < L; ++l) {
    h0bc[l] = broadcast_column(tape.leaf(params.h0[l]), B);
    h[l] = h0bc[l];
  }

  DecimateResult result;
  result.word_counts.assign(B, 0);

  // Padding is eos with aux 1, so padded steps just re-reset to h0; no
  // masking is needed inside the recurrence.
  for (std::size_t t = 0; t < batch.max_len; ++t) {
    Value x = embedding_lookup(tape, emb, batch.ids_at(t));
    auto a = batch.aux_at(t);
    for (std::size_t l = 0; l < L; ++l) {
      h[l] = dgru_step(params.layers[l], x, h[l], a, h0bc[l]);
      x = h[l];
    }
    result.states.push_back(h[L - 1]);
  }

  for (std::size_t j = 0; j < B; ++j) {
    int words = 0;
    for (std::size_t t = 0; t < batch.max_len; ++t)
      if (batch.mask_at(t)[j] == 1.0 && batch.aux_at(t)[j] == 1.0) ++words;
    result.word_counts[j] = words;
    result.max_words = std::max(result.max_words, static_cast<std::size_t>(words));
  }

  // Gather over [h0, h_1..h_T]: the summary of a word whose delimiter sits at
  // 0-based position p is the state at list index p (h_p, or h0 when p == 0).
  std::vector<Value> sources;
  sources.push_back(h0bc[L - 1]);
  for (const Value& s : result.states) sources.push_back(s);

  // delimiter positions per element
  std::vector<std::vector<int>> delim_pos(B);
  for (std::size_t j = 0; j < B; ++j)
    for (std::size_t t = 0; t < batch.max_len; ++t)
      if (batch.mask_at(t)[j] == 1.0 && batch.aux_at(t)[j] == 1.0)
        delim_pos[j].push_back(static_cast<int>(t));

  for (std::size_t w = 0; w < result.max_words; ++w) {
    std::vector<int> which(B, -1);
    for (std::size_t j = 0; j < B; ++j)
      if (w < delim_pos[j].size()) which[j] = delim_pos[j][w];
    result.summaries.push_back(pick_time_per_column(sources, which));
  }
  return result;
}

std::vector<Value> decimate_sentence(Tape& tape, const EncodedSequence& seq, EmbeddingTable& emb,
                                     DecimatorParams& params, const CharVocab& vocab) {
  Batch b = make_batch(std::span<const EncodedSequence>(&seq, 1), vocab);
  return decimate(tape, b, emb, params).summaries;
}

}  // namespace dcnmt
