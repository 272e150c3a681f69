#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvdroid/bytes.hpp"

namespace mvd::elf {

struct Section {
  std::string name;
  std::uint32_t type = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

inline constexpr std::uint32_t kShtNobits = 8;

/// Section headers of an ELF32/ELF64 image of either byte order. Throws
/// `BadMagic` or `MalformedInput`.
std::vector<Section> sections(ByteSpan data);

/// Concatenated contents of the named sections, in section-header order.
/// NOBITS sections contribute nothing.
Bytes section_contents(ByteSpan data, std::span<const std::string> names);

}  // namespace mvd::elf
