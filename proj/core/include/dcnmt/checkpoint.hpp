// SPDX-License-Identifier: Apache-2.0
//
// Bit-exact checkpoint file:
//   magic "DCNMT\x01", then blocks of
//   [name_len: u32 LE][name: UTF-8][rank: u32 LE][dims: u32 LE each]
//   [values: f64 LE each], then a trailing CRC32 (IEEE) of all prior bytes.
// Optimizer state uses the "opt/" name prefix; model configuration and the
// vocabularies are stored in "meta/" blocks so a checkpoint is self-contained.

#pragma once

#include "dcnmt/training.hpp"

#include <memory>
#include <optional>

namespace dcnmt {

void save_checkpoint(const std::string& path, const Model& model,
                     const TrainState* state = nullptr);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  std::optional<TrainState> state;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len);

}  // namespace dcnmt
