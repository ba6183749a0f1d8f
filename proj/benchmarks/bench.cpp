// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the training-dominant paths: a single recurrent step,
// a full batched loss with backward pass, and one beam expansion step.

#include <benchmark/benchmark.h>

#include "dcnmt/generation.hpp"
#include "dcnmt/model.hpp"

#include <memory>
#include <random>

namespace {

using namespace dcnmt;

std::vector<std::string> synthetic_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> words(1, 5), len(1, 6), letter(0, 19);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string line;
    int w = words(rng);
    for (int j = 0; j < w; ++j) {
      if (j) line += ' ';
      int l = len(rng);
      for (int k = 0; k < l; ++k) line += static_cast<char>('a' + letter(rng));
    }
    out.push_back(std::move(line));
  }
  return out;
}

std::unique_ptr<Model> bench_model(std::size_t hidden) {
  std::vector<std::string> corpus = synthetic_corpus(200, 7);
  CharVocab vocab = build_vocab(corpus, 40);
  ModelConfig cfg;
  cfg.embed_dim = hidden;
  cfg.dgru_hidden = hidden;
  cfg.enc_hidden = hidden;
  cfg.dec_hidden = hidden;
  cfg.igru_hidden = hidden;
  cfg.att_dim = hidden;
  cfg.seed = 7;
  return std::make_unique<Model>(cfg, vocab, vocab);
}

void BM_GruStep(benchmark::State& state) {
  std::size_t hidden = static_cast<std::size_t>(state.range(0));
  std::size_t batch = 80;
  std::mt19937_64 rng(7);
  GruParams cell("cell", hidden, hidden, true, rng);
  Tensor x(hidden, batch), h(hidden, batch);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * static_cast<double>(i % 17);
  for (auto _ : state) {
    Tape tape;
    Value out = gru_core(cell, tape.constant(x), tape.constant(h));
    benchmark::DoNotOptimize(out.val().data());
  }
}
BENCHMARK(BM_GruStep)->Arg(64)->Arg(128);

void BM_BatchLossBackward(benchmark::State& state) {
  auto model = bench_model(64);
  std::vector<std::string> lines = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 11);
  std::vector<EncodedSequence> src, tgt;
  for (const std::string& line : lines) {
    src.push_back(encode(line, model->src_vocab));
    tgt.push_back(encode_target(line, model->tgt_vocab));
  }
  Batch sb = make_batch(src, model->src_vocab);
  Batch tb = make_batch(tgt, model->tgt_vocab);
  for (auto _ : state) {
    for (Parameter* p : model->params) p->zero_grad();
    Tape tape;
    ForwardResult r = batch_loss(tape, *model, sb, tb);
    tape.backward(r.loss_sum);
    benchmark::DoNotOptimize(r.loss_sum.val().data());
  }
}
BENCHMARK(BM_BatchLossBackward)->Arg(8)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_BeamExpansion(benchmark::State& state) {
  auto model = bench_model(64);
  EncodedSequence src = encode("hello world", model->src_vocab);
  GenerationContext ctx(*model, src);
  std::size_t beam = static_cast<std::size_t>(state.range(0));
  std::vector<GenerationContext::Hypothesis> hyps(beam, ctx.start());
  std::vector<const GenerationContext::Hypothesis*> ptrs;
  for (const GenerationContext::Hypothesis& h : hyps) ptrs.push_back(&h);
  Tensor probs, next_h;
  for (auto _ : state) {
    ctx.step(ptrs, probs, next_h);
    benchmark::DoNotOptimize(probs.data());
  }
}
BENCHMARK(BM_BeamExpansion)->Arg(1)->Arg(12)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
