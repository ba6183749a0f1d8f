// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training: Adadelta with global-norm gradient clipping, seeded
// shuffling with length-sorted windows, length filtering, loss logging and
// checkpointing. Two runs with the same seed produce bit-identical parameter
// trajectories; resuming from a checkpoint continues them bit-identically.

#pragma once

#include "dcnmt/model.hpp"

#include <functional>
#include <utility>

namespace dcnmt {

struct Adadelta {
  double rho = 0.95;
  double eps = 1e-6;
  std::vector<Tensor> eg2;   // running E[g^2] per parameter
  std::vector<Tensor> edx2;  // running E[dx^2] per parameter

  void init(std::span<Parameter* const> params);
  // Applies one update from the accumulated gradients; does not clear them.
  void step(std::span<Parameter* const> params);
};

double global_grad_norm(std::span<Parameter* const> params);
// Scales all gradients so their global norm is at most max_norm.
void clip_global_norm(std::span<Parameter* const> params, double max_norm);

struct TrainConfig {
  std::size_t batch_size = 80;
  std::size_t max_words = 50;  // pairs with a longer side are filtered out
  double rho = 0.95;
  double eps = 1e-6;
  double clip_norm = 1.0;
  double grad_scale = 1.0;  // objective scale applied after clipping
  std::size_t epochs = 1;
  std::uint64_t seed = 1;
  std::size_t sort_window = 20;  // batches per length-sorted window
  std::size_t checkpoint_interval = 0;  // updates between checkpoints, 0 = off
  std::string checkpoint_path;
  std::string loss_log_path;  // CSV: update,epoch,loss_sum,loss_per_char,grad_norm,seconds
};

// Optimizer state plus position in the epoch/batch schedule; checkpointed so
// training can resume exactly where it stopped.
struct TrainState {
  Adadelta opt;
  std::uint64_t update = 0;
  std::uint64_t epoch = 0;           // current epoch index
  std::uint64_t batch_in_epoch = 0;  // batches already consumed this epoch
};

struct TrainStats {
  std::uint64_t updates = 0;
  std::size_t filtered_pairs = 0;
  std::vector<double> epoch_loss_per_char;
};

// Invoked after each epoch with its mean per-character loss; return true to
// stop early.
using EpochCallback = std::function<bool(std::size_t epoch, double loss_per_char)>;

TrainStats train_loop(Model& model, std::span<const std::pair<std::string, std::string>> pairs,
                      const TrainConfig& cfg, TrainState& state,
                      const EpochCallback& after_epoch = {});

}  // namespace dcnmt
