// SPDX-License-Identifier: Apache-2.0
//
// Character-synchronous beam search. Characters are scored one at a time by
// the interpolator; emitting a delimiter closes a word, whose target-side
// decimator summary feeds the decoder for the next decoded vector; emitting
// eos finalizes the hypothesis.

#pragma once

#include "dcnmt/model.hpp"

namespace dcnmt {

struct TranslationResult {
  std::string text;
  std::vector<int> ids;  // emitted ids, eos included when finalized
  double logp = 0.0;     // raw cumulative log-probability
  bool truncated = false;  // no hypothesis finalized within max_chars
};

// Incremental generation state over one source sentence. Forward-only: each
// step runs on a throwaway tape.
class GenerationContext {
 public:
  GenerationContext(Model& model, const EncodedSequence& src);

  struct Hypothesis {
    std::vector<int> ids;
    double logp = 0.0;
    Tensor igru_h;           // (igru_hidden, 1)
    Tensor td_h;             // target decimator state, (dgru_hidden, 1)
    std::vector<Tensor> s;   // decoder state per layer
    Tensor d;                // current decoded vector
    int y_prev;              // previous character (go at the start)
    double a_prev = 1.0;     // previous delimiter flag (a_0 = 1)
  };

  Hypothesis start();

  // Scores the next character for each hypothesis. probs is (vocab, K),
  // next_igru_h the post-step states (igru_hidden, K).
  void step(std::span<const Hypothesis* const> hyps, Tensor& probs, Tensor& next_igru_h);

  // Applies the chosen character: updates the target decimator and, on a
  // delimiter, advances the decoder to the next decoded vector. No decoder
  // step on eos (generation ends there).
  void advance(Hypothesis& h, int id, Tensor igru_col);

  const CharVocab& tgt_vocab() const;

 private:
  Model& model_;
  std::vector<Tensor> ann_;       // annotation per source word, (2*enc_hidden, 1)
  std::vector<Tensor> s0_;        // initial decoder state per layer
  Tensor f0_;                     // initial feedback
  Tensor td_h0_;                  // target decimator initial state
  Tensor d0_;                     // first decoded vector
  std::vector<Tensor> s1_;        // decoder state after the first step

  struct DecoderAdvance {
    Tensor d;
    std::vector<Tensor> s;
  };
  DecoderAdvance advance_decoder(const Tensor& feedback, const std::vector<Tensor>& s_prev);
};

// beam_width >= 1; max_chars 0 selects 6 * source length + 20. With
// length_norm, finalized hypotheses compare by logp / length.
TranslationResult translate(Model& model, const std::string& src_line, std::size_t beam_width,
                            std::size_t max_chars = 0, bool length_norm = false);

// Teacher-forced log-probability of a (source, target) pair; equals the
// negated training loss.
double score(Model& model, const std::string& src_line, const std::string& tgt_line);
double score_ids(Model& model, const EncodedSequence& src, const EncodedSequence& tgt);

// Log-probability of an arbitrary emitted id sequence through the same
// incremental path the beam uses. The sequence should end with eos.
double generation_replay_logp(Model& model, const EncodedSequence& src,
                              std::span<const int> tgt_ids);

}  // namespace dcnmt
