// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/training.hpp"

#include "dcnmt/checkpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace dcnmt {

void Adadelta::init(std::span<Parameter* const> params) {
  eg2.clear();
  edx2.clear();
  for (const Parameter* p : params) {
    eg2.emplace_back(p->value().rows(), p->value().cols());
    edx2.emplace_back(p->value().rows(), p->value().cols());
  }
}

void Adadelta::step(std::span<Parameter* const> params) {
  if (eg2.size() != params.size()) throw ShapeError("Adadelta: state not initialized");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = params[i]->value();
    const Tensor& g = params[i]->grad();
    Tensor& e_g = eg2[i];
    Tensor& e_dx = edx2[i];
    for (std::size_t j = 0; j < v.size(); ++j) {
      e_g[j] = rho * e_g[j] + (1.0 - rho) * g[j] * g[j];
      double dx = -std::sqrt(e_dx[j] + eps) / std::sqrt(e_g[j] + eps) * g[j];
      e_dx[j] = rho * e_dx[j] + (1.0 - rho) * dx * dx;
      v[j] += dx;
    }
  }
}

double global_grad_norm(std::span<Parameter* const> params) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    const Tensor& g = p->grad();
    for (std::size_t j = 0; j < g.size(); ++j) sq += g[j] * g[j];
  }
  return std::sqrt(sq);
}

void clip_global_norm(std::span<Parameter* const> params, double max_norm) {
  double norm = global_grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  double s = max_norm / norm;
  for (Parameter* p : params) {
    Tensor& g = p->grad();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] *= s;
  }
}

namespace {

std::mt19937_64 epoch_rng(std::uint64_t seed, std::uint64_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  return std::mt19937_64(seq);
}

// Shuffle, then sort each window of sort_window batches by source length so
// batches have similar lengths; deterministic under the epoch seed.
std::vector<std::vector<std::size_t>> plan_batches(std::size_t n,
                                                   const std::vector<std::size_t>& src_len,
                                                   const TrainConfig& cfg,
                                                   std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = epoch_rng(cfg.seed, epoch);
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t window = cfg.batch_size * std::max<std::size_t>(1, cfg.sort_window);
  for (std::size_t w0 = 0; w0 < n; w0 += window) {
    auto begin = order.begin() + static_cast<std::ptrdiff_t>(w0);
    auto end = order.begin() + static_cast<std::ptrdiff_t>(std::min(n, w0 + window));
    std::stable_sort(begin, end,
                     [&](std::size_t a, std::size_t b) { return src_len[a] < src_len[b]; });
  }

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
    std::size_t b1 = std::min(n, b0 + cfg.batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b0),
                         order.begin() + static_cast<std::ptrdiff_t>(b1));
  }
  return batches;
}

}  // namespace

TrainStats train_loop(Model& model, std::span<const std::pair<std::string, std::string>> pairs,
                      const TrainConfig& cfg, TrainState& state,
                      const EpochCallback& after_epoch) {
  std::vector<EncodedSequence> srcs, tgts;
  TrainStats stats;
  for (const auto& [s, t] : pairs) {
    EncodedSequence es = encode(s, model.src_vocab);
    EncodedSequence et = encode_target(t, model.tgt_vocab);
    if (es.word_count > static_cast<int>(cfg.max_words) ||
        et.word_count > static_cast<int>(cfg.max_words)) {
      ++stats.filtered_pairs;
      continue;
    }
    srcs.push_back(std::move(es));
    tgts.push_back(std::move(et));
  }
  if (srcs.empty()) throw DataError("no training pairs remain after length filtering");

  std::vector<std::size_t> src_len(srcs.size());
  for (std::size_t i = 0; i < srcs.size(); ++i) src_len[i] = srcs[i].ids.size();

  if (state.opt.eg2.empty()) {
    state.opt.rho = cfg.rho;
    state.opt.eps = cfg.eps;
    state.opt.init(model.params);
  }

  std::ofstream log;
  if (!cfg.loss_log_path.empty()) {
    bool fresh = state.update == 0;
    log.open(cfg.loss_log_path, fresh ? std::ios::trunc : std::ios::app);
    if (!log) throw DataError("cannot open loss log: " + cfg.loss_log_path);
    if (fresh) log << "update,epoch,loss_sum,loss_per_char,grad_norm,seconds\n";
  }
  auto t_start = std::chrono::steady_clock::now();

  for (std::uint64_t epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    auto batches = plan_batches(srcs.size(), src_len, cfg, epoch);
    double epoch_loss = 0.0;
    std::size_t epoch_chars = 0;

    for (std::uint64_t bi = state.batch_in_epoch; bi < batches.size(); ++bi) {
      std::vector<EncodedSequence> bs, bt;
      for (std::size_t idx : batches[bi]) {
        bs.push_back(srcs[idx]);
        bt.push_back(tgts[idx]);
      }
      Batch src_batch = make_batch(bs, model.src_vocab);
      Batch tgt_batch = make_batch(bt, model.tgt_vocab);

      for (Parameter* p : model.params) p->zero_grad();
      Tape tape;
      ForwardResult fwd = batch_loss(tape, model, src_batch, tgt_batch);
      tape.backward(fwd.loss_sum);

      double norm = global_grad_norm(model.params);
      clip_global_norm(model.params, cfg.clip_norm);
      if (cfg.grad_scale != 1.0)
        for (Parameter* p : model.params) {
          Tensor& g = p->grad();
          for (std::size_t j = 0; j < g.size(); ++j) g[j] *= cfg.grad_scale;
        }
      state.opt.step(model.params);

      double loss = fwd.loss_sum.val().item();
      epoch_loss += loss;
      epoch_chars += fwd.char_count;
      ++state.update;
      state.batch_in_epoch = bi + 1;
      ++stats.updates;

      if (log.is_open()) {
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                          .count();
        char row[192];
        std::snprintf(row, sizeof(row), "%llu,%llu,%.17g,%.17g,%.17g,%.3f\n",
                      static_cast<unsigned long long>(state.update),
                      static_cast<unsigned long long>(epoch), loss,
                      loss / static_cast<double>(fwd.char_count), norm, secs);
        log << row;
      }
      if (cfg.checkpoint_interval > 0 && state.update % cfg.checkpoint_interval == 0 &&
          !cfg.checkpoint_path.empty())
        save_checkpoint(cfg.checkpoint_path, model, &state);
    }

    state.epoch = epoch + 1;
    state.batch_in_epoch = 0;
    double per_char = epoch_chars > 0 ? epoch_loss / static_cast<double>(epoch_chars) : 0.0;
    stats.epoch_loss_per_char.push_back(per_char);
    if (after_epoch && after_epoch(epoch, per_char)) break;
  }

  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, model, &state);
  return stats;
}

}  // namespace dcnmt
