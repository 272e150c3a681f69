#include "mvdroid/opcode_view.hpp"

#include <algorithm>
#include <string>

#include "mvdroid/dex_opcodes.hpp"
#include "mvdroid/log.hpp"

namespace mvd {
namespace {

constexpr std::uint32_t kGramMagic = 0x4f44564d;  // "MVDO"
constexpr std::uint32_t kFlagTruncated = 1u;
constexpr std::uint32_t kFlagShort = 2u;

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

std::string_view to_string(OpcodeCategory c) {
  switch (c) {
    case OpcodeCategory::Move: return "Move";
    case OpcodeCategory::Get: return "Get";
    case OpcodeCategory::Put: return "Put";
    case OpcodeCategory::If: return "If";
    case OpcodeCategory::Goto: return "Goto";
    case OpcodeCategory::Invoke: return "Invoke";
    case OpcodeCategory::Return: return "Return";
    case OpcodeCategory::Separator: return "Separator";
  }
  return "?";
}

std::optional<OpcodeCategory> categorize_mnemonic(std::string_view m) {
  if (starts_with(m, "move")) return OpcodeCategory::Move;
  if (starts_with(m, "if-")) return OpcodeCategory::If;
  if (starts_with(m, "goto")) return OpcodeCategory::Goto;
  if (starts_with(m, "invoke-")) return OpcodeCategory::Invoke;
  if (starts_with(m, "return")) return OpcodeCategory::Return;
  if (m.find("get") != std::string_view::npos) return OpcodeCategory::Get;
  if (m.find("put") != std::string_view::npos) return OpcodeCategory::Put;
  return std::nullopt;
}

std::optional<OpcodeCategory> categorize_opcode(std::uint8_t opcode) {
  return categorize_mnemonic(dex::opcode_info(opcode).name);
}

std::vector<OpcodeCategory> categorize_opcodes(std::span<const dex::DexFile> dex_files) {
  std::vector<std::pair<const dex::MethodRef*, const dex::CodeItem*>> bodies;
  for (const auto& dex : dex_files)
    for (const auto& [idx, code] : dex.code_items) bodies.emplace_back(&dex.methods[idx], &code);
  std::stable_sort(bodies.begin(), bodies.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });

  std::vector<OpcodeCategory> seq;
  bool any = false;
  for (const auto& [method, code] : bodies) {
    bool started = false;
    for (const auto& ins : code->instructions) {
      const auto cat = categorize_opcode(ins.opcode);
      if (!cat) continue;
      if (!started && any) seq.push_back(OpcodeCategory::Separator);
      started = true;
      seq.push_back(*cat);
    }
    any = any || started;
  }
  return seq;
}

OpcodeGramMatrix build_gram_matrix(std::span<const OpcodeCategory> seq, std::size_t window_length, std::size_t step,
                                   std::size_t row_cap) {
  if (window_length < 1) throw Error(ErrorCode::BadConfig, "window_length must be >= 1");
  if (step != 1) throw Error(ErrorCode::BadConfig, "only step 1 is supported");
  OpcodeGramMatrix m;
  m.window_length = window_length;
  if (seq.size() < window_length) {
    m.short_sequence = true;
    log::warn("opcode sequence of length " + std::to_string(seq.size()) + " is shorter than window " +
              std::to_string(window_length) + "; empty opcode-gram matrix");
    return m;
  }
  std::size_t rows = seq.size() - window_length + 1;
  if (rows > row_cap) {
    log::warn("opcode-gram matrix truncated from " + std::to_string(rows) + " to " + std::to_string(row_cap) + " rows");
    rows = row_cap;
    m.truncated = true;
  }
  m.rows = rows;
  m.data.assign(rows * m.width(), 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < window_length; ++j)
      m.data[r * m.width() + j * kCategoryCount + static_cast<std::size_t>(seq[r + j])] = 1;
  return m;
}

Bytes encode_gram_matrix(const OpcodeGramMatrix& m) {
  ByteWriter w;
  w.u32(kGramMagic);
  w.u64(m.rows);
  w.u32(static_cast<std::uint32_t>(m.window_length));
  w.u32((m.truncated ? kFlagTruncated : 0) | (m.short_sequence ? kFlagShort : 0));
  const std::size_t row_bytes = (m.width() + 7) / 8;
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::vector<std::uint8_t> packed(row_bytes, 0);
    for (std::size_t c = 0; c < m.width(); ++c)
      if (m.at(r, c)) packed[c / 8] |= static_cast<std::uint8_t>(1u << (c % 8));
    w.bytes(packed);
  }
  return std::move(w.buffer());
}

OpcodeGramMatrix decode_gram_matrix(ByteSpan data) {
  ByteReader r(data);
  if (r.u32() != kGramMagic) throw Error(ErrorCode::BadMagic, "not an opcode-gram record");
  OpcodeGramMatrix m;
  m.rows = r.u64();
  m.window_length = r.u32();
  const std::uint32_t flags = r.u32();
  m.truncated = flags & kFlagTruncated;
  m.short_sequence = flags & kFlagShort;
  if (m.window_length < 1) throw Error(ErrorCode::MalformedInput, "window_length 0 in opcode-gram record");
  const std::size_t row_bytes = (m.width() + 7) / 8;
  if (m.rows > r.remaining() / std::max<std::size_t>(row_bytes, 1))
    throw Error(ErrorCode::TruncatedFile, "opcode-gram payload shorter than header claims");
  m.data.assign(m.rows * m.width(), 0);
  for (std::size_t row = 0; row < m.rows; ++row) {
    const ByteSpan packed = r.bytes(row_bytes);
    for (std::size_t c = 0; c < m.width(); ++c) m.data[row * m.width() + c] = (packed[c / 8] >> (c % 8)) & 1u;
  }
  return m;
}

}  // namespace mvd
