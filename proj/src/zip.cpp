#include "mvdroid/zip.hpp"

#include <zlib.h>

namespace mvd::zip {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;

Bytes inflate_raw(ByteSpan in, std::size_t expected, const std::string& name) {
  Bytes out(expected);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
    throw Error(ErrorCode::CorruptEntry, "inflateInit failed for " + name);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected)
    throw Error(ErrorCode::CorruptEntry, "deflate stream invalid for " + name);
  return out;
}

Bytes deflate_raw(ByteSpan in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(ErrorCode::MalformedInput, "deflateInit failed");
  Bytes out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::MalformedInput, "deflate failed");
  return out;
}

}  // namespace

Archive::Archive(Bytes data) : data_(std::move(data)) {
  constexpr std::size_t kEndRecord = 22;
  if (data_.size() < kEndRecord) throw Error(ErrorCode::NotAZip, "file shorter than an end record");
  const std::size_t max_back = std::min<std::size_t>(data_.size(), kEndRecord + 0xffff);
  std::size_t end_pos = data_.size();
  ByteReader r(data_, ErrorCode::NotAZip);
  for (std::size_t back = kEndRecord; back <= max_back; ++back) {
    const std::size_t pos = data_.size() - back;
    if (r.read_at<std::uint32_t>(pos) == kEndSig) {
      end_pos = pos;
      break;
    }
  }
  if (end_pos == data_.size()) throw Error(ErrorCode::NotAZip, "no end-of-central-directory record");

  r.seek(end_pos + 10);
  const std::uint16_t total_entries = r.u16();
  const std::uint32_t cd_size = r.u32();
  const std::uint32_t cd_offset = r.u32();
  if (static_cast<std::uint64_t>(cd_offset) + cd_size > end_pos)
    throw Error(ErrorCode::NotAZip, "central directory out of bounds");

  r.seek(cd_offset);
  entries_.reserve(total_entries);
  for (std::uint16_t i = 0; i < total_entries; ++i) {
    if (r.u32() != kCentralSig) throw Error(ErrorCode::NotAZip, "bad central directory signature");
    r.skip(6);  // version made by, version needed, flags
    Entry e;
    e.method = r.u16();
    r.skip(4);  // mod time, mod date
    e.crc32 = r.u32();
    e.compressed_size = r.u32();
    e.uncompressed_size = r.u32();
    const std::uint16_t name_len = r.u16();
    const std::uint16_t extra_len = r.u16();
    const std::uint16_t comment_len = r.u16();
    r.skip(8);  // disk start, internal attrs, external attrs
    e.local_header_offset = r.u32();
    const ByteSpan name = r.bytes(name_len);
    e.name.assign(name.begin(), name.end());
    r.skip(extra_len + comment_len);
    entries_.push_back(std::move(e));
  }
}

Bytes Archive::read(const Entry& e) const {
  ByteReader r(data_, ErrorCode::CorruptEntry);
  r.seek(e.local_header_offset);
  if (r.u32() != kLocalSig) throw Error(ErrorCode::CorruptEntry, "bad local header for " + e.name);
  r.skip(22);
  const std::uint16_t name_len = r.u16();
  const std::uint16_t extra_len = r.u16();
  r.skip(name_len + extra_len);
  const ByteSpan payload = r.bytes(e.compressed_size);

  Bytes out;
  if (e.method == 0) {
    if (e.compressed_size != e.uncompressed_size)
      throw Error(ErrorCode::CorruptEntry, "stored entry size mismatch for " + e.name);
    out.assign(payload.begin(), payload.end());
  } else if (e.method == 8) {
    out = inflate_raw(payload, e.uncompressed_size, e.name);
  } else {
    throw Error(ErrorCode::CorruptEntry,
                "unsupported compression method " + std::to_string(e.method) + " for " + e.name);
  }
  if (crc32_of(out) != e.crc32) throw Error(ErrorCode::CorruptEntry, "CRC mismatch for " + e.name);
  return out;
}

void Writer::add(const std::string& name, ByteSpan content, bool deflate) {
  Entry e;
  e.name = name;
  e.crc32 = crc32_of(content);
  e.uncompressed_size = static_cast<std::uint32_t>(content.size());
  Bytes packed;
  if (deflate) {
    packed = deflate_raw(content);
    e.method = 8;
  } else {
    packed.assign(content.begin(), content.end());
    e.method = 0;
  }
  e.compressed_size = static_cast<std::uint32_t>(packed.size());
  e.local_header_offset = static_cast<std::uint32_t>(out_.size());

  out_.u32(kLocalSig);
  out_.u16(20);
  out_.u16(0);
  out_.u16(e.method);
  out_.u16(0);
  out_.u16(0x21);  // 1980-01-01, fixed for reproducible archives
  out_.u32(e.crc32);
  out_.u32(e.compressed_size);
  out_.u32(e.uncompressed_size);
  out_.u16(static_cast<std::uint16_t>(name.size()));
  out_.u16(0);
  out_.str(name);
  out_.bytes(packed);
  entries_.push_back(std::move(e));
}

Bytes Writer::finish() {
  const auto cd_offset = static_cast<std::uint32_t>(out_.size());
  for (const Entry& e : entries_) {
    out_.u32(kCentralSig);
    out_.u16(20);
    out_.u16(20);
    out_.u16(0);
    out_.u16(e.method);
    out_.u16(0);
    out_.u16(0x21);
    out_.u32(e.crc32);
    out_.u32(e.compressed_size);
    out_.u32(e.uncompressed_size);
    out_.u16(static_cast<std::uint16_t>(e.name.size()));
    out_.u16(0);
    out_.u16(0);
    out_.u16(0);
    out_.u16(0);
    out_.u32(0);
    out_.u32(e.local_header_offset);
    out_.str(e.name);
  }
  const auto cd_size = static_cast<std::uint32_t>(out_.size() - cd_offset);
  out_.u32(kEndSig);
  out_.u16(0);
  out_.u16(0);
  out_.u16(static_cast<std::uint16_t>(entries_.size()));
  out_.u16(static_cast<std::uint16_t>(entries_.size()));
  out_.u32(cd_size);
  out_.u32(cd_offset);
  out_.u16(0);
  Bytes result = std::move(out_.buffer());
  out_ = ByteWriter{};
  entries_.clear();
  return result;
}

}  // namespace mvd::zip
