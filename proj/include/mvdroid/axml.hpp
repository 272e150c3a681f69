#pragma once

#include <cstdint>
#include <vector>

#include "mvdroid/bytes.hpp"

namespace mvd::axml {

inline constexpr std::uint16_t kStringPool = 0x0001;
inline constexpr std::uint16_t kXmlDocument = 0x0003;
inline constexpr std::uint16_t kStartNamespace = 0x0100;
inline constexpr std::uint16_t kEndNamespace = 0x0101;
inline constexpr std::uint16_t kStartElement = 0x0102;
inline constexpr std::uint16_t kEndElement = 0x0103;
inline constexpr std::uint16_t kCData = 0x0104;
inline constexpr std::uint16_t kResourceMap = 0x0180;

struct Chunk {
  std::uint16_t type = 0;
  std::uint16_t header_size = 0;
  std::uint32_t size = 0;
  std::size_t offset = 0;  // absolute offset of the chunk header
};

/// Top-level document chunks found back to back in `data`, each with its
/// children. Throws `MalformedInput` if the chunk framing does not tile the
/// input exactly.
struct Document {
  Chunk root;
  std::vector<Chunk> children;
};
std::vector<Document> walk(ByteSpan data);

/// Concatenated payloads (bytes after the chunk header) of string-pool,
/// start-element and end-element chunks.
Bytes data_sections(ByteSpan data);

}  // namespace mvd::axml
