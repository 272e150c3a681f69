#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvdroid/error.hpp"

namespace mvd {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

/// Bounds-checked little-endian cursor over a byte span. Reads past the end
/// raise `TruncatedFile` unless the caller picks another code.
class ByteReader {
 public:
  explicit ByteReader(ByteSpan data, ErrorCode overflow = ErrorCode::TruncatedFile)
      : data_(data), overflow_(overflow) {}

  std::size_t size() const { return data_.size(); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void seek(std::size_t pos) {
    if (pos > data_.size()) fail(pos, 0);
    pos_ = pos;
  }
  void skip(std::size_t n) { seek(checked_end(pos_, n)); }

  template <typename T>
  T read() {
    const std::size_t end = checked_end(pos_, sizeof(T));
    T v{};
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
    pos_ = end;
    return v;
  }
  std::uint8_t u8() { return read<std::uint8_t>(); }
  std::uint16_t u16() { return read<std::uint16_t>(); }
  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::uint64_t u64() { return read<std::uint64_t>(); }

  template <typename T>
  T read_at(std::size_t pos) {
    const std::size_t saved = pos_;
    seek(pos);
    T v = read<T>();
    pos_ = saved;
    return v;
  }

  std::uint32_t uleb128() {
    std::uint32_t result = 0;
    for (int shift = 0; shift < 35; shift += 7) {
      const std::uint8_t b = u8();
      result |= static_cast<std::uint32_t>(b & 0x7f) << shift;
      if ((b & 0x80) == 0) return result;
    }
    throw Error(ErrorCode::MalformedInput, "uleb128 longer than 5 bytes");
  }

  ByteSpan bytes(std::size_t n) {
    const std::size_t end = checked_end(pos_, n);
    ByteSpan s = data_.subspan(pos_, n);
    pos_ = end;
    return s;
  }
  ByteSpan slice(std::size_t off, std::size_t n) const {
    checked_end(off, n);
    return data_.subspan(off, n);
  }

 private:
  std::size_t checked_end(std::size_t off, std::size_t n) const {
    if (off > data_.size() || n > data_.size() - off) fail(off, n);
    return off + n;
  }
  [[noreturn]] void fail(std::size_t off, std::size_t n) const {
    throw Error(overflow_, "read of " + std::to_string(n) + " bytes at offset " +
                               std::to_string(off) + " exceeds size " +
                               std::to_string(data_.size()));
  }

  ByteSpan data_;
  std::size_t pos_ = 0;
  ErrorCode overflow_;
};

/// Little-endian append helpers used by every writer in the project.
class ByteWriter {
 public:
  Bytes& buffer() { return buf_; }
  const Bytes& buffer() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

  template <typename T>
  void write(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf_.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void u8(std::uint8_t v) { write(v); }
  void u16(std::uint16_t v) { write(v); }
  void u32(std::uint32_t v) { write(v); }
  void u64(std::uint64_t v) { write(v); }
  void uleb128(std::uint32_t v) {
    do {
      std::uint8_t b = v & 0x7f;
      v >>= 7;
      if (v != 0) b |= 0x80;
      buf_.push_back(b);
    } while (v != 0);
  }
  void bytes(ByteSpan s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void str(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void pad_to(std::size_t alignment) {
    while (buf_.size() % alignment != 0) buf_.push_back(0);
  }
  template <typename T>
  void patch(std::size_t pos, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf_[pos + i] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  }

 private:
  Bytes buf_;
};

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteSpan data);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::uint32_t crc32_of(ByteSpan data);

}  // namespace mvd
