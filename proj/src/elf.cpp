#include "mvdroid/elf.hpp"

#include <algorithm>

namespace mvd::elf {
namespace {

class EndianReader {
 public:
  EndianReader(ByteSpan data, bool big) : data_(data), big_(big) {}

  std::uint64_t get(std::uint64_t off, std::size_t n) const {
    if (off > data_.size() || n > data_.size() - off)
      throw Error(ErrorCode::MalformedInput, "ELF read past end at " + std::to_string(off));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = big_ ? i : n - 1 - i;
      v = (v << 8) | data_[off + k];
    }
    return v;
  }

 private:
  ByteSpan data_;
  bool big_;
};

}  // namespace

std::vector<Section> sections(ByteSpan data) {
  if (data.size() < 16 || data[0] != 0x7f || data[1] != 'E' || data[2] != 'L' || data[3] != 'F')
    throw Error(ErrorCode::BadMagic, "not an ELF image");
  const bool is64 = data[4] == 2;
  if (data[4] != 1 && data[4] != 2) throw Error(ErrorCode::MalformedInput, "bad ELF class");
  if (data[5] != 1 && data[5] != 2) throw Error(ErrorCode::MalformedInput, "bad ELF data encoding");
  const EndianReader r(data, data[5] == 2);

  const std::uint64_t shoff = is64 ? r.get(0x28, 8) : r.get(0x20, 4);
  const std::uint64_t shentsize = is64 ? r.get(0x3a, 2) : r.get(0x2e, 2);
  const std::uint64_t shnum = is64 ? r.get(0x3c, 2) : r.get(0x30, 2);
  const std::uint64_t shstrndx = is64 ? r.get(0x3e, 2) : r.get(0x32, 2);
  if (shnum == 0) return {};
  if (shentsize < (is64 ? 64u : 40u)) throw Error(ErrorCode::MalformedInput, "ELF section header too small");
  if (shstrndx >= shnum) throw Error(ErrorCode::MalformedInput, "ELF shstrndx out of range");
  if (shoff > data.size() || shnum * shentsize > data.size() - shoff)
    throw Error(ErrorCode::TruncatedFile, "ELF section header table exceeds image");

  std::vector<Section> out(shnum);
  std::vector<std::uint64_t> name_off(shnum);
  for (std::uint64_t i = 0; i < shnum; ++i) {
    const std::uint64_t base = shoff + i * shentsize;
    name_off[i] = r.get(base, 4);
    out[i].type = static_cast<std::uint32_t>(r.get(base + 4, 4));
    out[i].offset = is64 ? r.get(base + 0x18, 8) : r.get(base + 0x10, 4);
    out[i].size = is64 ? r.get(base + 0x20, 8) : r.get(base + 0x14, 4);
    if (out[i].type != kShtNobits && (out[i].offset > data.size() || out[i].size > data.size() - out[i].offset))
      throw Error(ErrorCode::MalformedInput, "ELF section " + std::to_string(i) + " exceeds image");
  }
  const Section& strtab = out[shstrndx];
  for (std::uint64_t i = 0; i < shnum; ++i) {
    if (name_off[i] >= strtab.size) throw Error(ErrorCode::MalformedInput, "ELF section name out of range");
    const auto* begin = data.data() + strtab.offset + name_off[i];
    const auto* limit = data.data() + strtab.offset + strtab.size;
    const auto* end = std::find(begin, limit, std::uint8_t{0});
    out[i].name.assign(begin, end);
  }
  return out;
}

Bytes section_contents(ByteSpan data, std::span<const std::string> names) {
  Bytes out;
  for (const auto& s : sections(data)) {
    if (s.type == kShtNobits) continue;
    if (std::find(names.begin(), names.end(), s.name) == names.end()) continue;
    const auto content = data.subspan(s.offset, s.size);
    out.insert(out.end(), content.begin(), content.end());
  }
  return out;
}

}  // namespace mvd::elf
