// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/generation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcnmt {

namespace {

Tensor column(const Tensor& m, std::size_t j) {
  Tensor c(m.rows(), 1);
  for (std::size_t r = 0; r < m.rows(); ++r) c(r, 0) = m(r, j);
  return c;
}

std::vector<std::vector<double>> ones_masks(std::size_t count, std::size_t width) {
  return std::vector<std::vector<double>>(count, std::vector<double>(width, 1.0));
}

}  // namespace

GenerationContext::GenerationContext(Model& model, const EncodedSequence& src) : model_(model) {
  Tape tape;
  Batch sb = make_batch(std::span<const EncodedSequence>(&src, 1), model.src_vocab);
  DecimateResult words = decimate(tape, sb, model.src_emb, model.src_dec);
  std::vector<std::vector<double>> masks = ones_masks(words.max_words, 1);
  Annotations ann = encode_words(tape, words.summaries, masks, model.enc);
  for (const Value& row : ann.rows) ann_.push_back(row.val());

  std::vector<Value> s0 = decoder_init(tape, ann, model.dec);
  for (const Value& v : s0) s0_.push_back(v.val());
  f0_ = model.dec.f0.value();
  td_h0_ = model.tgt_dec.h0[0].value();

  Value fb = tape.leaf(model.dec.f0);
  DecoderStepResult first = decoder_step(fb, s0, ann, masks, model.dec);
  d0_ = first.d.val();
  for (const Value& v : first.s) s1_.push_back(v.val());
}

const CharVocab& GenerationContext::tgt_vocab() const { return model_.tgt_vocab; }

GenerationContext::Hypothesis GenerationContext::start() {
  Hypothesis h;
  h.igru_h = Tensor(model_.cfg.igru_hidden, 1);
  h.td_h = td_h0_;
  h.s = s1_;
  h.d = d0_;
  h.y_prev = model_.tgt_vocab.go_id;
  h.a_prev = 1.0;
  return h;
}

void GenerationContext::step(std::span<const Hypothesis* const> hyps, Tensor& probs,
                             Tensor& next_igru_h) {
  const std::size_t K = hyps.size();
  const std::size_t H = model_.cfg.igru_hidden;
  Tensor h_prev(H, K);
  Tensor d(model_.cfg.igru_hidden, K);
  std::vector<int> y_prev(K);
  std::vector<double> a_prev(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Hypothesis& h = *hyps[k];
    for (std::size_t r = 0; r < H; ++r) h_prev(r, k) = h.igru_h(r, 0);
    for (std::size_t r = 0; r < d.rows(); ++r) d(r, k) = h.d(r, 0);
    y_prev[k] = h.y_prev;
    a_prev[k] = h.a_prev;
  }

  Tape tape;
  Value y_emb = embedding_lookup(tape, model_.tgt_emb, y_prev);
  Value h = igru_step(model_.igru, y_emb, tape.constant(std::move(h_prev)), a_prev,
                      tape.constant(std::move(d)));
  Value p = char_logits(h, model_.out);
  probs = p.val();
  next_igru_h = h.val();
}

GenerationContext::DecoderAdvance GenerationContext::advance_decoder(
    const Tensor& feedback, const std::vector<Tensor>& s_prev) {
  Tape tape;
  Annotations ann;
  for (const Tensor& row : ann_) {
    ann.rows.push_back(tape.constant(row));
  }
  std::vector<std::vector<double>> masks = ones_masks(ann_.size(), 1);
  std::vector<Value> sv;
  for (const Tensor& t : s_prev) sv.push_back(tape.constant(t));
  DecoderStepResult r = decoder_step(tape.constant(feedback), sv, ann, masks, model_.dec);
  DecoderAdvance out;
  out.d = r.d.val();
  for (const Value& v : r.s) out.s.push_back(v.val());
  return out;
}

void GenerationContext::advance(Hypothesis& h, int id, Tensor igru_col) {
  h.igru_h = std::move(igru_col);
  h.ids.push_back(id);
  if (id == model_.tgt_vocab.eos_id) return;  // finalized, no further steps

  bool boundary = model_.tgt_vocab.is_boundary(id);
  Tensor summary = h.td_h;  // state before the delimiter is the word summary
  {
    Tape tape;
    int one_id[] = {id};
    double flag[] = {boundary ? 1.0 : 0.0};
    Value emb = embedding_lookup(tape, model_.tgt_emb, one_id);
    Value next = dgru_step(model_.tgt_dec.layers[0], emb, tape.constant(h.td_h), flag,
                           tape.leaf(model_.tgt_dec.h0[0]));
    h.td_h = next.val();
  }
  if (boundary) {
    DecoderAdvance adv = advance_decoder(summary, h.s);
    h.d = adv.d;
    h.s = adv.s;
  }
  h.y_prev = id;
  h.a_prev = boundary ? 1.0 : 0.0;
}

namespace {

// Compares a+[a_tail] against b+[b_tail] lexicographically.
bool lex_less(const std::vector<int>& a, int a_tail, const std::vector<int>& b, int b_tail) {
  std::size_t na = a.size() + 1, nb = b.size() + 1;
  for (std::size_t i = 0; i < std::min(na, nb); ++i) {
    int av = i < a.size() ? a[i] : a_tail;
    int bv = i < b.size() ? b[i] : b_tail;
    if (av != bv) return av < bv;
  }
  return na < nb;
}

}  // namespace

TranslationResult translate(Model& model, const std::string& src_line, std::size_t beam_width,
                            std::size_t max_chars, bool length_norm) {
  if (beam_width < 1) throw DataError("translate: beam width must be at least 1");
  EncodedSequence src = encode(src_line, model.src_vocab);
  if (max_chars == 0) max_chars = 6 * src.ids.size() + 20;

  GenerationContext ctx(model, src);
  const CharVocab& vocab = model.tgt_vocab;
  const std::size_t V = vocab.size();

  std::vector<GenerationContext::Hypothesis> live;
  live.push_back(ctx.start());

  struct Finalized {
    std::vector<int> ids;
    double logp;
  };
  std::vector<Finalized> finalized;
  auto final_key = [&](const Finalized& f) {
    return length_norm ? f.logp / static_cast<double>(f.ids.size()) : f.logp;
  };

  for (std::size_t t = 0; t < max_chars && !live.empty(); ++t) {
    std::vector<const GenerationContext::Hypothesis*> ptrs;
    for (const auto& h : live) ptrs.push_back(&h);
    Tensor probs, next_h;
    ctx.step(ptrs, probs, next_h);

    struct Candidate {
      double logp;
      std::size_t parent;
      int id;
    };
    std::vector<Candidate> cands;
    cands.reserve(live.size() * V);
    for (std::size_t k = 0; k < live.size(); ++k)
      for (std::size_t v = 0; v < V; ++v)
        cands.push_back({live[k].logp + std::log(probs(v, k)), k, static_cast<int>(v)});

    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return lex_less(live[a.parent].ids, a.id, live[b.parent].ids, b.id);
    });
    if (cands.size() > beam_width) cands.resize(beam_width);

    std::vector<GenerationContext::Hypothesis> next_live;
    for (const Candidate& c : cands) {
      GenerationContext::Hypothesis h = live[c.parent];
      h.logp = c.logp;
      ctx.advance(h, c.id, column(next_h, c.parent));
      if (c.id == vocab.eos_id) finalized.push_back({h.ids, h.logp});
      else next_live.push_back(std::move(h));
    }
    live = std::move(next_live);

    // A live hypothesis can only lose log-probability, so once the best of
    // them is below the best finalized score the search is settled. Not
    // valid under length normalization, where the ratio may still improve.
    if (!length_norm && !finalized.empty() && !live.empty()) {
      double best_final = final_key(*std::max_element(
          finalized.begin(), finalized.end(),
          [&](const Finalized& a, const Finalized& b) { return final_key(a) < final_key(b); }));
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, h.logp);
      if (best_live <= best_final) break;
    }
  }

  TranslationResult result;
  if (!finalized.empty()) {
    const Finalized* best = &finalized[0];
    for (const Finalized& f : finalized) {
      double fk = final_key(f), bk = final_key(*best);
      if (fk > bk || (fk == bk && std::lexicographical_compare(f.ids.begin(), f.ids.end(),
                                                               best->ids.begin(),
                                                               best->ids.end())))
        best = &f;
    }
    result.ids = best->ids;
    result.logp = best->logp;
  } else {
    const GenerationContext::Hypothesis* best = nullptr;
    for (const auto& h : live)
      if (!best || h.logp > best->logp) best = &h;
    if (best) {
      result.ids = best->ids;
      result.logp = best->logp;
    }
    result.truncated = true;
  }
  result.text = decode(result.ids, vocab);
  return result;
}

double score_ids(Model& model, const EncodedSequence& src, const EncodedSequence& tgt) {
  if (tgt.ids.empty() || tgt.ids.back() != model.tgt_vocab.eos_id)
    throw DataError("score: target sequence must end with eos");
  Tape tape;
  Batch sb = make_batch(std::span<const EncodedSequence>(&src, 1), model.src_vocab);
  Batch tb = make_batch(std::span<const EncodedSequence>(&tgt, 1), model.tgt_vocab);
  return batch_loss(tape, model, sb, tb).per_sentence_logp.val().item();
}

double score(Model& model, const std::string& src_line, const std::string& tgt_line) {
  return score_ids(model, encode(src_line, model.src_vocab),
                   encode_target(tgt_line, model.tgt_vocab));
}

double generation_replay_logp(Model& model, const EncodedSequence& src,
                              std::span<const int> tgt_ids) {
  GenerationContext ctx(model, src);
  GenerationContext::Hypothesis h = ctx.start();
  double logp = 0.0;
  for (int id : tgt_ids) {
    const GenerationContext::Hypothesis* hp = &h;
    Tensor probs, next_h;
    ctx.step(std::span<const GenerationContext::Hypothesis* const>(&hp, 1), probs, next_h);
    logp += std::log(probs(static_cast<std::size_t>(id), 0));
    ctx.advance(h, id, column(next_h, 0));
    if (id == model.tgt_vocab.eos_id) break;
  }
  return logp;
}

}  // namespace dcnmt
