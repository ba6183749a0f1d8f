// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/model.hpp"

namespace dcnmt {

Model::Model(const ModelConfig& config, CharVocab src, CharVocab tgt)
    : Model(config, std::move(src), std::move(tgt), std::mt19937_64(config.seed)) {}

Model::Model(const ModelConfig& config, CharVocab src, CharVocab tgt, std::mt19937_64 rng)
    : cfg(config),
      src_vocab(std::move(src)),
      tgt_vocab(std::move(tgt)),
      src_emb("src_emb", src_vocab.size(), cfg.embed_dim),
      tgt_emb("tgt_emb", tgt_vocab.size(), cfg.embed_dim),
      src_dec("src_dec", cfg.embed_dim, cfg.dgru_hidden, cfg.layers, cfg.use_bias, rng),
      tgt_dec("tgt_dec", cfg.embed_dim, cfg.dgru_hidden, 1, cfg.use_bias, rng),
      enc("enc", cfg.dgru_hidden, cfg.enc_hidden, cfg.layers, cfg.use_bias, rng),
      dec("dec", cfg.dgru_hidden, 2 * cfg.enc_hidden, cfg.dec_hidden, cfg.att_dim,
          cfg.igru_hidden, cfg.layers, cfg.use_bias, rng),
      igru("igru", cfg.embed_dim, cfg.igru_hidden, cfg.use_bias, rng),
      out("out", tgt_vocab.size(), cfg.igru_hidden, rng) {
  src_emb.weights().value() = fan_in_init(src_vocab.size(), cfg.embed_dim, rng);
  tgt_emb.weights().value() = fan_in_init(tgt_vocab.size(), cfg.embed_dim, rng);

  params.push_back(&src_emb.weights());
  params.push_back(&tgt_emb.weights());
  src_dec.collect(params);
  tgt_dec.collect(params);
  enc.collect(params);
  dec.collect(params);
  igru.collect(params);
  out.collect(params);
}

ForwardResult batch_loss(Tape& tape, Model& model, const Batch& src, const Batch& tgt) {
  DecimateResult src_words = decimate(tape, src, model.src_emb, model.src_dec);

  std::vector<std::vector<double>> src_masks;
  for (std::size_t w = 0; w < src_words.max_words; ++w)
    src_masks.push_back(src_words.slot_mask(w));

  Annotations ann = encode_words(tape, src_words.summaries, src_masks, model.enc);

  DecimateResult tgt_words = decimate(tape, tgt, model.tgt_emb, model.tgt_dec);

  std::vector<Value> s = decoder_init(tape, ann, model.dec);
  std::vector<Value> d_slots;
  for (std::size_t w = 0; w < tgt_words.max_words; ++w) {
    Value feedback = w == 0 ? broadcast_column(tape.leaf(model.dec.f0), tgt.size)
                            : tgt_words.summaries[w - 1];
    DecoderStepResult step = decoder_step(feedback, s, ann, src_masks, model.dec);
    d_slots.push_back(step.d);
    s = step.s;
  }

  InterpolationResult interp = interpolate_training(tape, tgt, d_slots, model.tgt_emb,
                                                    model.igru, model.out,
                                                    model.tgt_vocab.go_id);

  ForwardResult result;
  for (const Value& lp : interp.step_logp)
    result.per_sentence_logp =
        result.per_sentence_logp.defined() ? add(result.per_sentence_logp, lp) : lp;
  result.loss_sum = scale(sum_all(result.per_sentence_logp), -1.0);
  for (double m : tgt.mask)
    if (m == 1.0) ++result.char_count;
  return result;
}

double sentence_loss(Model& model, const EncodedSequence& src, const EncodedSequence& tgt) {
  Tape tape;
  Batch sb = make_batch(std::span<const EncodedSequence>(&src, 1), model.src_vocab);
  Batch tb = make_batch(std::span<const EncodedSequence>(&tgt, 1), model.tgt_vocab);
  return batch_loss(tape, model, sb, tb).loss_sum.val().item();
}

}  // namespace dcnmt
