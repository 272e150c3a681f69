#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mvdroid/dex.hpp"

namespace mvd {

enum class OpcodeCategory : std::uint8_t { Move, Get, Put, If, Goto, Invoke, Return, Separator };

inline constexpr std::size_t kCategoryCount = 8;
inline constexpr std::size_t kDefaultWindowLength = 4;
inline constexpr std::size_t kDefaultRowCap = 200000;

std::string_view to_string(OpcodeCategory c);

/// Mnemonic-family classification (`move*`, `*get*`, `*put*`, `if*`,
/// `goto*`, `invoke*`, `return*`). Anything else yields nullopt.
std::optional<OpcodeCategory> categorize_mnemonic(std::string_view mnemonic);
std::optional<OpcodeCategory> categorize_opcode(std::uint8_t opcode);

/// Walks every method body of the app in (class, name, proto) order and
/// emits the retained categories, with one Separator between the
/// subsequences of consecutive bodies. Bodies that retain nothing are
/// skipped.
std::vector<OpcodeCategory> categorize_opcodes(std::span<const dex::DexFile> dex_files);

/// Row-major 0/1 matrix of shape rows x (8 * window_length).
struct OpcodeGramMatrix {
  std::size_t rows = 0;
  std::size_t window_length = kDefaultWindowLength;
  std::vector<std::uint8_t> data;
  bool truncated = false;       // row cap hit; trailing rows dropped
  bool short_sequence = false;  // sequence shorter than the window

  std::size_t width() const { return kCategoryCount * window_length; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return data[r * width() + c]; }
};

/// Step-1 sliding window over `seq`; each row concatenates the window's
/// one-hot category vectors. Sequences shorter than the window give a
/// zero-row matrix with `short_sequence` set.
OpcodeGramMatrix build_gram_matrix(std::span<const OpcodeCategory> seq, std::size_t window_length = kDefaultWindowLength,
                                   std::size_t step = 1, std::size_t row_cap = kDefaultRowCap);

/// Header (magic, rows, window_length, flags) followed by bit-packed rows.
Bytes encode_gram_matrix(const OpcodeGramMatrix& m);
OpcodeGramMatrix decode_gram_matrix(ByteSpan data);

}  // namespace mvd
