#include "mvdroid/checkpoint.hpp"

#include <bit>
#include <cstring>

namespace mvd {
namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4344564d;  // "MVDC"
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

Bytes encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.u32(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(0);  // total length, patched below
  w.u32(static_cast<std::uint32_t>(ckpt.config_text.size()));
  w.str(ckpt.config_text);
  w.u32(static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    if (static_cast<ad::Index>(a.values.size()) != ad::numel(a.shape))
      throw Error(ErrorCode::ShapeMismatch, a.name + ": " + std::to_string(a.values.size()) + " values for shape " +
                                                ad::shape_str(a.shape));
    w.u32(static_cast<std::uint32_t>(a.name.size()));
    w.str(a.name);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) w.u64(static_cast<std::uint64_t>(d));
    for (float v : a.values) w.u32(std::bit_cast<std::uint32_t>(v));
  }
  const std::uint64_t total = w.size() + 4;
  std::memcpy(w.buffer().data() + 8, &total, sizeof total);
  w.u32(crc32_of(w.buffer()));
  return std::move(w.buffer());
}

Checkpoint decode_checkpoint(ByteSpan data) {
  if (data.size() < 4) throw Error(ErrorCode::TruncatedFile, "checkpoint shorter than its magic");
  ByteReader r(data);
  if (r.u32() != kCheckpointMagic) throw Error(ErrorCode::BadMagic, "not a checkpoint");
  if (data.size() < 20) throw Error(ErrorCode::TruncatedFile, "checkpoint shorter than its header");
  r.skip(4);
  if (const auto total = r.u64(); total != data.size())
    throw Error(total > data.size() ? ErrorCode::TruncatedFile : ErrorCode::MalformedInput,
                "checkpoint declares " + std::to_string(total) + " bytes, file has " + std::to_string(data.size()));
  const ByteSpan body = data.first(data.size() - 4);
  const std::uint32_t stored = ByteReader(data.last(4)).u32();
  if (crc32_of(body) != stored) throw Error(ErrorCode::ChecksumMismatch, "checkpoint CRC does not match");
  ByteReader b(body);
  b.skip(4);
  if (const auto v = b.u32(); v != kCheckpointVersion)
    throw Error(ErrorCode::MalformedInput, "unsupported checkpoint version " + std::to_string(v));
  b.skip(8);
  Checkpoint ckpt;
  const ByteSpan cfg = b.bytes(b.u32());
  ckpt.config_text.assign(cfg.begin(), cfg.end());
  const std::uint32_t count = b.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const ByteSpan name = b.bytes(b.u32());
    a.name.assign(name.begin(), name.end());
    const std::uint32_t rank = b.u32();
    for (std::uint32_t d = 0; d < rank; ++d) a.shape.push_back(static_cast<ad::Index>(b.u64()));
    const auto n = static_cast<std::size_t>(ad::numel(a.shape));
    if (n > b.remaining() / 4) throw Error(ErrorCode::TruncatedFile, "checkpoint array " + a.name + " cut short");
    a.values.resize(n);
    for (auto& v : a.values) v = std::bit_cast<float>(b.u32());
    ckpt.arrays.push_back(std::move(a));
  }
  if (b.remaining() != 0) throw Error(ErrorCode::MalformedInput, "trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace mvd
