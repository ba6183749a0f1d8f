// SPDX-License-Identifier: Apache-2.0
//
// Character vocabulary, text encoding with delimiter auxiliary flags, and
// padded batching. A sentence is a character sequence terminated by a word
// delimiter; the auxiliary sequence marks delimiter positions (eos counts as
// the closing delimiter of a target sentence's final word).

#pragma once

#include "dcnmt/tensor.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcnmt {

// Ids are contiguous from 0: regular characters ordered by descending corpus
// frequency (ties by ascending codepoint), then the four specials
// <del>, <unk>, <go>, <eos>.
struct CharVocab {
  std::vector<char32_t> regular;   // ids 0..regular.size()-1
  std::map<char32_t, int> ids;     // regular chars plus the space delimiter
  int delimiter_id = -1;
  int unk_id = -1;
  int go_id = -1;
  int eos_id = -1;

  std::size_t size() const { return regular.size() + 4; }
  int id_of(char32_t cp) const;          // unknown codepoints map to unk_id
  bool is_boundary(int id) const { return id == delimiter_id || id == eos_id; }
};

struct EncodedSequence {
  std::vector<int> ids;   // x_1..x_T
  std::vector<int> aux;   // a_1..a_T, 1 at delimiter/eos positions
  int word_count = 0;     // sum of aux
};

// Time-major padded arrays of shape (max_len, size). Padding uses eos with
// aux 1, so padded steps never straddle a word; mask is 1 on real positions.
struct Batch {
  std::size_t max_len = 0;
  std::size_t size = 0;
  std::vector<int> ids;
  std::vector<double> aux;
  std::vector<double> mask;

  std::span<const int> ids_at(std::size_t t) const { return {ids.data() + t * size, size}; }
  std::span<const double> aux_at(std::size_t t) const { return {aux.data() + t * size, size}; }
  std::span<const double> mask_at(std::size_t t) const { return {mask.data() + t * size, size}; }
};

// UTF-8 codec. Malformed input raises DataError.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view codepoints);

// Trims and collapses whitespace runs to single spaces. No case folding.
std::string normalize(std::string_view text);

// Selects the max_chars most frequent codepoints (space excluded from the
// ranking; it is always present as the delimiter special).
CharVocab build_vocab(std::span<const std::string> lines, std::size_t max_chars);

// Normalizes, maps characters to ids, and appends a terminating delimiter.
EncodedSequence encode(std::string_view text, const CharVocab& vocab);

// Same, but the final word is closed by eos instead of the delimiter, as
// required for decoder targets.
EncodedSequence encode_target(std::string_view text, const CharVocab& vocab);

// Inverse of encode up to unk collapse (U+FFFD) and the trailing delimiter;
// go/eos render as empty.
std::string decode(std::span<const int> ids, const CharVocab& vocab);

Batch make_batch(std::span<const EncodedSequence> seqs, const CharVocab& vocab);

// Vocab file: one line per entry, `<id>\t<U+XXXX>`, specials as `<del>`,
// `<unk>`, `<go>`, `<eos>`; ids ascending, LF endings.
void save_vocab(const CharVocab& vocab, const std::string& path);
CharVocab load_vocab(const std::string& path);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace dcnmt
