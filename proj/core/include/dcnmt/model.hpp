// SPDX-License-Identifier: Apache-2.0
//
// Full translation model: source decimator -> bidirectional word encoder ->
// attention decoder (fed back by a target-side decimator) -> interpolator
// with per-character softmax. Owns every trainable parameter in a fixed
// registration order used by the optimizer and the checkpoint format.

#pragma once

#include "dcnmt/attention.hpp"
#include "dcnmt/decimator.hpp"
#include "dcnmt/encoder.hpp"
#include "dcnmt/interpolator.hpp"
#include "dcnmt/text_pipeline.hpp"

namespace dcnmt {

struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t dgru_hidden = 64;   // word summary width
  std::size_t enc_hidden = 64;    // per direction
  std::size_t dec_hidden = 64;
  std::size_t igru_hidden = 64;
  std::size_t att_dim = 64;
  std::size_t layers = 1;         // source decimator, encoder and decoder depth
  bool use_bias = true;
  std::uint64_t seed = 1;
};

class Model {
 public:
  Model(const ModelConfig& config, CharVocab src, CharVocab tgt);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

 private:
  Model(const ModelConfig& config, CharVocab src, CharVocab tgt, std::mt19937_64 rng);

 public:

  ModelConfig cfg;
  CharVocab src_vocab, tgt_vocab;

  EmbeddingTable src_emb;
  EmbeddingTable tgt_emb;  // shared by the target decimator and the interpolator
  DecimatorParams src_dec;
  DecimatorParams tgt_dec;  // always one layer
  EncoderParams enc;
  DecoderParams dec;
  GruParams igru;
  OutputProjection out;

  // fixed order; optimizer state and checkpoint blocks follow it
  std::vector<Parameter*> params;
};

struct ForwardResult {
  Value loss_sum;           // scalar, negative sum of target-character log-probs
  Value per_sentence_logp;  // (1, batch)
  std::size_t char_count = 0;  // real target characters in the batch
};

// Teacher-forced loss over a padded batch. The caller owns the tape and may
// run backward on loss_sum.
ForwardResult batch_loss(Tape& tape, Model& model, const Batch& src, const Batch& tgt);

// Forward-only single-pair loss (the batch path with batch size 1).
double sentence_loss(Model& model, const EncodedSequence& src, const EncodedSequence& tgt);

}  // namespace dcnmt
