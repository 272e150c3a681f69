#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvdroid/bytes.hpp"

namespace mvd::zip {

struct Entry {
  std::string name;
  std::uint16_t method = 0;  // 0 stored, 8 deflate
  std::uint32_t crc32 = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t uncompressed_size = 0;
  std::uint32_t local_header_offset = 0;
};

/// Read-only view of a ZIP container held in memory. Only the central
/// directory is parsed up front; entry payloads are inflated on demand and
/// CRC-checked.
class Archive {
 public:
  /// Throws `NotAZip` when no end-of-central-directory record is found or
  /// the directory is inconsistent.
  explicit Archive(Bytes data);

  const std::vector<Entry>& entries() const { return entries_; }
  /// Throws `CorruptEntry` on CRC mismatch, bad local header or
  /// unsupported compression.
  Bytes read(const Entry& entry) const;

 private:
  Bytes data_;
  std::vector<Entry> entries_;
};

/// Minimal ZIP writer (stored or deflated entries, no ZIP64). Used to build
/// fixtures and synthetic corpora.
class Writer {
 public:
  void add(const std::string& name, ByteSpan content, bool deflate = true);
  Bytes finish();

 private:
  ByteWriter out_;
  std::vector<Entry> entries_;
};

}  // namespace mvd::zip
