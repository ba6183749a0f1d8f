// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>

namespace dcnmt {

namespace {

constexpr char kMagic[] = {'D', 'C', 'N', 'M', 'T', '\x01'};
constexpr std::size_t kMagicLen = sizeof(kMagic);
constexpr double kFormatVersion = 1.0;

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

void put_block(std::string& out, const std::string& name, std::span<const std::uint32_t> dims,
               std::span<const double> values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (std::uint32_t d : dims) put_u32(out, d);
  for (double v : values) put_f64(out, v);
}

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  std::uint32_t dims[2] = {static_cast<std::uint32_t>(t.rows()),
                           static_cast<std::uint32_t>(t.cols())};
  put_block(out, name, dims, {t.data(), t.size()});
}

void put_vec(std::string& out, const std::string& name, std::span<const double> values) {
  std::uint32_t dim = static_cast<std::uint32_t>(values.size());
  put_block(out, name, {&dim, 1}, values);
}

struct BlockReader {
  const std::string& buf;
  std::size_t pos = kMagicLen;

  bool done() const { return pos >= buf.size(); }
  std::uint32_t u32() {
    if (pos + 4 > buf.size()) throw DataError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    if (pos + 8 > buf.size()) throw DataError("checkpoint truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

struct Block {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

std::map<std::string, Block> read_blocks(const std::string& buf) {
  std::map<std::string, Block> blocks;
  BlockReader r{buf};
  while (!r.done()) {
    std::uint32_t name_len = r.u32();
    if (r.pos + name_len > buf.size()) throw DataError("checkpoint truncated");
    std::string name = buf.substr(r.pos, name_len);
    r.pos += name_len;
    Block b;
    std::uint32_t rank = r.u32();
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      b.dims.push_back(r.u32());
      count *= b.dims.back();
    }
    b.values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) b.values.push_back(r.f64());
    if (!blocks.emplace(std::move(name), std::move(b)).second)
      throw DataError("checkpoint contains a duplicate block");
  }
  return blocks;
}

CharVocab vocab_from_block(const Block& chars) {
  CharVocab v;
  for (double d : chars.values) {
    char32_t cp = static_cast<char32_t>(d);
    v.ids[cp] = static_cast<int>(v.regular.size());
    v.regular.push_back(cp);
  }
  int n = static_cast<int>(v.regular.size());
  v.delimiter_id = n;
  v.unk_id = n + 1;
  v.go_id = n + 2;
  v.eos_id = n + 3;
  v.ids[U' '] = v.delimiter_id;
  return v;
}

const Block& require(const std::map<std::string, Block>& blocks, const std::string& name) {
  auto it = blocks.find(name);
  if (it == blocks.end()) throw DataError("checkpoint is missing block '" + name + "'");
  return it->second;
}

}  // namespace

std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len) {
  static const auto table = make_crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void save_checkpoint(const std::string& path, const Model& model, const TrainState* state) {
  std::string buf(kMagic, kMagicLen);

  const ModelConfig& c = model.cfg;
  double cfg_vals[] = {kFormatVersion,
                       static_cast<double>(c.embed_dim),
                       static_cast<double>(c.dgru_hidden),
                       static_cast<double>(c.enc_hidden),
                       static_cast<double>(c.dec_hidden),
                       static_cast<double>(c.igru_hidden),
                       static_cast<double>(c.att_dim),
                       static_cast<double>(c.layers),
                       c.use_bias ? 1.0 : 0.0,
                       static_cast<double>(c.seed)};
  put_vec(buf, "meta/config", cfg_vals);

  std::vector<double> chars;
  for (char32_t cp : model.src_vocab.regular) chars.push_back(static_cast<double>(cp));
  put_vec(buf, "meta/src_chars", chars);
  chars.clear();
  for (char32_t cp : model.tgt_vocab.regular) chars.push_back(static_cast<double>(cp));
  put_vec(buf, "meta/tgt_chars", chars);

  for (const Parameter* p : model.params) put_tensor(buf, p->name(), p->value());

  if (state) {
    double progress[] = {static_cast<double>(state->update), static_cast<double>(state->epoch),
                         static_cast<double>(state->batch_in_epoch)};
    put_vec(buf, "opt/progress", progress);
    double settings[] = {state->opt.rho, state->opt.eps};
    put_vec(buf, "opt/settings", settings);
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      put_tensor(buf, "opt/eg2/" + model.params[i]->name(), state->opt.eg2[i]);
      put_tensor(buf, "opt/edx2/" + model.params[i]->name(), state->opt.edx2[i]);
    }
  }

  std::uint32_t crc = crc32_ieee(reinterpret_cast<const unsigned char*>(buf.data()), buf.size());
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagicLen + 4 || std::memcmp(buf.data(), kMagic, kMagicLen) != 0)
    throw DataError(path + ": not a checkpoint file");

  std::string body = buf.substr(0, buf.size() - 4);
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 4 + i]))
              << (8 * i);
  if (crc32_ieee(reinterpret_cast<const unsigned char*>(body.data()), body.size()) != stored)
    throw DataError(path + ": checksum mismatch");

  auto blocks = read_blocks(body);

  const Block& cfg_block = require(blocks, "meta/config");
  if (cfg_block.values.size() != 10 || cfg_block.values[0] != kFormatVersion)
    throw DataError(path + ": unsupported checkpoint format");
  ModelConfig cfg;
  cfg.embed_dim = static_cast<std::size_t>(cfg_block.values[1]);
  cfg.dgru_hidden = static_cast<std::size_t>(cfg_block.values[2]);
  cfg.enc_hidden = static_cast<std::size_t>(cfg_block.values[3]);
  cfg.dec_hidden = static_cast<std::size_t>(cfg_block.values[4]);
  cfg.igru_hidden = static_cast<std::size_t>(cfg_block.values[5]);
  cfg.att_dim = static_cast<std::size_t>(cfg_block.values[6]);
  cfg.layers = static_cast<std::size_t>(cfg_block.values[7]);
  cfg.use_bias = cfg_block.values[8] != 0.0;
  cfg.seed = static_cast<std::uint64_t>(cfg_block.values[9]);

  LoadedCheckpoint result;
  result.model = std::make_unique<Model>(cfg, vocab_from_block(require(blocks, "meta/src_chars")),
                                         vocab_from_block(require(blocks, "meta/tgt_chars")));

  for (Parameter* p : result.model->params) {
    const Block& b = require(blocks, p->name());
    Tensor& v = p->value();
    if (b.dims.size() != 2 || b.dims[0] != v.rows() || b.dims[1] != v.cols())
      throw DataError(path + ": shape mismatch for '" + p->name() + "'");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = b.values[i];
  }

  if (blocks.count("opt/progress")) {
    TrainState state;
    const Block& progress = require(blocks, "opt/progress");
    state.update = static_cast<std::uint64_t>(progress.values.at(0));
    state.epoch = static_cast<std::uint64_t>(progress.values.at(1));
    state.batch_in_epoch = static_cast<std::uint64_t>(progress.values.at(2));
    const Block& settings = require(blocks, "opt/settings");
    state.opt.rho = settings.values.at(0);
    state.opt.eps = settings.values.at(1);
    state.opt.init(result.model->params);
    for (std::size_t i = 0; i < result.model->params.size(); ++i) {
      const std::string& name = result.model->params[i]->name();
      const Block& eg2 = require(blocks, "opt/eg2/" + name);
      const Block& edx2 = require(blocks, "opt/edx2/" + name);
      if (eg2.values.size() != state.opt.eg2[i].size() ||
          edx2.values.size() != state.opt.edx2[i].size())
        throw DataError(path + ": optimizer state shape mismatch for '" + name + "'");
      for (std::size_t j = 0; j < eg2.values.size(); ++j) state.opt.eg2[i][j] = eg2.values[j];
      for (std::size_t j = 0; j < edx2.values.size(); ++j) state.opt.edx2[i][j] = edx2.values[j];
    }
    result.state = std::move(state);
  }
  return result;
}

}  // namespace dcnmt
