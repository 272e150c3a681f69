#include "mvdroid/dex.hpp"

#include <algorithm>
#include <set>

#include "mvdroid/dex_opcodes.hpp"

namespace mvd::dex {
namespace {

constexpr std::uint16_t kPackedSwitchPayload = 0x0100;
constexpr std::uint16_t kSparseSwitchPayload = 0x0200;
constexpr std::uint16_t kFillArrayPayload = 0x0300;

void check_magic(ByteSpan bytes) {
  if (bytes.size() < 8) throw Error(ErrorCode::BadMagic, "stream shorter than a DEX magic");
  const bool ok = bytes[0] == 'd' && bytes[1] == 'e' && bytes[2] == 'x' && bytes[3] == '\n' &&
                  std::isdigit(bytes[4]) && std::isdigit(bytes[5]) && std::isdigit(bytes[6]) && bytes[7] == 0;
  if (!ok) throw Error(ErrorCode::BadMagic, "not a DEX magic");
}

void check_index(std::uint64_t idx, std::size_t size, const char* what) {
  if (idx >= size)
    throw Error(ErrorCode::IndexOutOfRange,
                std::string(what) + " index " + std::to_string(idx) + " >= " + std::to_string(size));
}

void check_section(std::uint64_t off, std::uint64_t count, std::uint64_t item, std::size_t file_size,
                   const char* what) {
  if (count != 0 && off + count * item > file_size)
    throw Error(ErrorCode::TruncatedFile, std::string(what) + " section exceeds file");
}

Header read_header(ByteReader& r) {
  Header h;
  for (auto& b : h.magic) b = r.u8();
  h.checksum = r.u32();
  for (auto& b : h.signature) b = r.u8();
  h.file_size = r.u32();
  h.header_size = r.u32();
  h.endian_tag = r.u32();
  h.link_size = r.u32();
  h.link_off = r.u32();
  h.map_off = r.u32();
  h.string_ids_size = r.u32();
  h.string_ids_off = r.u32();
  h.type_ids_size = r.u32();
  h.type_ids_off = r.u32();
  h.proto_ids_size = r.u32();
  h.proto_ids_off = r.u32();
  h.field_ids_size = r.u32();
  h.field_ids_off = r.u32();
  h.method_ids_size = r.u32();
  h.method_ids_off = r.u32();
  h.class_defs_size = r.u32();
  h.class_defs_off = r.u32();
  h.data_size = r.u32();
  h.data_off = r.u32();
  return h;
}

std::vector<Instruction> decode_instructions(ByteReader& r, std::uint32_t units) {
  std::vector<std::uint16_t> insns(units);
  for (auto& u : insns) u = r.u16();

  std::vector<Instruction> out;
  std::uint32_t pc = 0;
  while (pc < units) {
    const std::uint16_t unit = insns[pc];
    const auto opcode = static_cast<std::uint8_t>(unit & 0xff);
    std::uint64_t width = opcode_info(opcode).width;
    bool payload = false;
    if (opcode == op::kNop && unit != 0) {
      // Switch / array payloads live inline after the code; they are data.
      payload = true;
      if (unit == kPackedSwitchPayload) {
        if (pc + 1 >= units) throw Error(ErrorCode::TruncatedFile, "packed-switch payload");
        width = 4 + 2ull * insns[pc + 1];
      } else if (unit == kSparseSwitchPayload) {
        if (pc + 1 >= units) throw Error(ErrorCode::TruncatedFile, "sparse-switch payload");
        width = 2 + 4ull * insns[pc + 1];
      } else if (unit == kFillArrayPayload) {
        if (pc + 3 >= units) throw Error(ErrorCode::TruncatedFile, "fill-array-data payload");
        const std::uint64_t elem = insns[pc + 1];
        const std::uint64_t count = insns[pc + 2] | (static_cast<std::uint64_t>(insns[pc + 3]) << 16);
        width = 4 + (elem * count + 1) / 2;
      } else {
        payload = false;
      }
    }
    if (pc + width > units)
      throw Error(ErrorCode::TruncatedFile, "instruction at " + std::to_string(pc) + " overruns code item");
    if (!payload) {
      Instruction ins;
      ins.offset = pc;
      ins.opcode = opcode;
      ins.operand_bytes.reserve(2 * width - 1);
      ins.operand_bytes.push_back(static_cast<std::uint8_t>(unit >> 8));
      for (std::uint64_t k = 1; k < width; ++k) {
        ins.operand_bytes.push_back(static_cast<std::uint8_t>(insns[pc + k] & 0xff));
        ins.operand_bytes.push_back(static_cast<std::uint8_t>(insns[pc + k] >> 8));
      }
      out.push_back(std::move(ins));
    }
    pc += static_cast<std::uint32_t>(width);
  }
  return out;
}

CodeItem read_code_item(ByteSpan bytes, std::uint32_t off) {
  ByteReader r(bytes);
  r.seek(off);
  CodeItem c;
  c.registers = r.u16();
  c.ins = r.u16();
  c.outs = r.u16();
  c.tries = r.u16();
  r.u32();  // debug_info_off
  c.insns_units = r.u32();
  c.instructions = decode_instructions(r, c.insns_units);
  return c;
}

std::uint16_t method_index_operand(const Instruction& ins) {
  return static_cast<std::uint16_t>(ins.operand_bytes.at(1) | (ins.operand_bytes.at(2) << 8));
}

}  // namespace

DexFile parse_dex_file(ByteSpan bytes) {
  check_magic(bytes);
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::TruncatedFile, "DEX header needs 0x70 bytes");
  ByteReader r(bytes);
  DexFile dex;
  Header& h = dex.header;
  h = read_header(r);
  if (h.file_size > bytes.size() || h.file_size < kHeaderSize)
    throw Error(ErrorCode::TruncatedFile, "header file_size " + std::to_string(h.file_size) +
                                              " vs available " + std::to_string(bytes.size()));
  bytes = bytes.first(h.file_size);
  r = ByteReader(bytes);
  if (static_cast<std::uint64_t>(h.data_off) + h.data_size > h.file_size)
    throw Error(ErrorCode::TruncatedFile, "data section exceeds file");
  check_section(h.string_ids_off, h.string_ids_size, 4, bytes.size(), "string_ids");
  check_section(h.type_ids_off, h.type_ids_size, 4, bytes.size(), "type_ids");
  check_section(h.proto_ids_off, h.proto_ids_size, 12, bytes.size(), "proto_ids");
  check_section(h.field_ids_off, h.field_ids_size, 8, bytes.size(), "field_ids");
  check_section(h.method_ids_off, h.method_ids_size, 8, bytes.size(), "method_ids");
  check_section(h.class_defs_off, h.class_defs_size, 32, bytes.size(), "class_defs");

  r.seek(h.string_ids_off);
  dex.string_data_offsets.resize(h.string_ids_size);
  for (auto& off : dex.string_data_offsets) off = r.u32();
  dex.strings.reserve(h.string_ids_size);
  for (std::uint32_t off : dex.string_data_offsets) {
    ByteReader s(bytes);
    s.seek(off);
    s.uleb128();  // utf16 length
    std::string str;
    for (std::uint8_t c = s.u8(); c != 0; c = s.u8()) str.push_back(static_cast<char>(c));
    dex.strings.push_back(std::move(str));
  }

  r.seek(h.type_ids_off);
  dex.type_descriptor_idx.resize(h.type_ids_size);
  for (auto& idx : dex.type_descriptor_idx) {
    idx = r.u32();
    check_index(idx, dex.strings.size(), "type descriptor string");
    dex.types.push_back(dex.strings[idx]);
  }

  r.seek(h.proto_ids_off);
  dex.protos.resize(h.proto_ids_size);
  for (auto& p : dex.protos) {
    p.shorty_idx = r.u32();
    p.return_type_idx = r.u32();
    p.parameters_off = r.u32();
    check_index(p.shorty_idx, dex.strings.size(), "proto shorty string");
    check_index(p.return_type_idx, dex.types.size(), "proto return type");
  }
  for (auto& p : dex.protos) {
    std::string s = "(";
    if (p.parameters_off != 0) {
      ByteReader tl(bytes);
      tl.seek(p.parameters_off);
      const std::uint32_t n = tl.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint16_t t = tl.u16();
        check_index(t, dex.types.size(), "proto parameter type");
        p.parameters.push_back(t);
        s += dex.types[t];
      }
    }
    s += ")" + dex.types[p.return_type_idx];
    dex.proto_strings.push_back(std::move(s));
  }

  r.seek(h.field_ids_off);
  dex.fields.resize(h.field_ids_size);
  for (auto& f : dex.fields) {
    f.class_idx = r.u16();
    f.type_idx = r.u16();
    f.name_idx = r.u32();
    check_index(f.class_idx, dex.types.size(), "field class");
    check_index(f.type_idx, dex.types.size(), "field type");
    check_index(f.name_idx, dex.strings.size(), "field name");
  }

  r.seek(h.method_ids_off);
  dex.method_ids.resize(h.method_ids_size);
  for (auto& m : dex.method_ids) {
    m.class_idx = r.u16();
    m.proto_idx = r.u16();
    m.name_idx = r.u32();
    check_index(m.class_idx, dex.types.size(), "method class");
    check_index(m.proto_idx, dex.protos.size(), "method proto");
    check_index(m.name_idx, dex.strings.size(), "method name");
    dex.methods.push_back(
        MethodRef{dex.types[m.class_idx], dex.strings[m.name_idx], dex.proto_strings[m.proto_idx], false});
  }

  r.seek(h.class_defs_off);
  dex.class_defs.resize(h.class_defs_size);
  for (auto& c : dex.class_defs) {
    c.class_idx = r.u32();
    c.access_flags = r.u32();
    c.superclass_idx = r.u32();
    c.interfaces_off = r.u32();
    c.source_file_idx = r.u32();
    c.annotations_off = r.u32();
    c.class_data_off = r.u32();
    c.static_values_off = r.u32();
    check_index(c.class_idx, dex.types.size(), "class_def class");
    if (c.superclass_idx != kNoIndex) check_index(c.superclass_idx, dex.types.size(), "class_def superclass");
  }

  for (const auto& c : dex.class_defs) {
    if (c.class_data_off == 0) continue;
    ByteReader cd(bytes);
    cd.seek(c.class_data_off);
    const std::uint32_t static_fields = cd.uleb128();
    const std::uint32_t instance_fields = cd.uleb128();
    const std::uint32_t direct_methods = cd.uleb128();
    const std::uint32_t virtual_methods = cd.uleb128();
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(static_fields) + instance_fields; ++i) {
      cd.uleb128();
      cd.uleb128();
    }
    for (std::uint32_t list = 0; list < 2; ++list) {
      const std::uint32_t count = list == 0 ? direct_methods : virtual_methods;
      std::uint64_t method_idx = 0;
      for (std::uint32_t i = 0; i < count; ++i) {
        method_idx += cd.uleb128();
        cd.uleb128();  // access flags
        const std::uint32_t code_off = cd.uleb128();
        check_index(method_idx, dex.methods.size(), "class_data method");
        if (code_off == 0) continue;
        const auto idx = static_cast<std::uint32_t>(method_idx);
        dex.code_items[idx] = read_code_item(bytes, code_off);
        dex.methods[idx].is_local = true;
      }
    }
  }

  for (const auto& [caller, code] : dex.code_items)
    for (const auto& ins : code.instructions)
      if (invokes_method(ins.opcode)) check_index(method_index_operand(ins), dex.methods.size(), "invoke target");

  return dex;
}

std::vector<DexFile> parse_dex(const ArtifactStream& stream) {
  std::vector<DexFile> out;
  for (const auto& f : stream.index) out.push_back(parse_dex_file(stream.file_bytes(f)));
  return out;
}

std::vector<DexFile> parse_dex(ByteSpan stream) {
  std::vector<DexFile> out;
  std::size_t off = 0;
  while (off < stream.size()) {
    out.push_back(parse_dex_file(stream.subspan(off)));
    off += out.back().header.file_size;
  }
  return out;
}

Bytes serialize_index_sections(const DexFile& dex) {
  ByteWriter w;
  for (std::uint32_t off : dex.string_data_offsets) w.u32(off);
  for (std::uint32_t idx : dex.type_descriptor_idx) w.u32(idx);
  for (const auto& p : dex.protos) {
    w.u32(p.shorty_idx);
    w.u32(p.return_type_idx);
    w.u32(p.parameters_off);
  }
  for (const auto& f : dex.fields) {
    w.u16(f.class_idx);
    w.u16(f.type_idx);
    w.u32(f.name_idx);
  }
  for (const auto& m : dex.method_ids) {
    w.u16(m.class_idx);
    w.u16(m.proto_idx);
    w.u32(m.name_idx);
  }
  for (const auto& c : dex.class_defs) {
    w.u32(c.class_idx);
    w.u32(c.access_flags);
    w.u32(c.superclass_idx);
    w.u32(c.interfaces_off);
    w.u32(c.source_file_idx);
    w.u32(c.annotations_off);
    w.u32(c.class_data_off);
    w.u32(c.static_values_off);
  }
  return std::move(w.buffer());
}

std::vector<CallEdge> invoke_edges(const DexFile& dex) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
  for (const auto& [caller, code] : dex.code_items)
    for (const auto& ins : code.instructions)
      if (invokes_method(ins.opcode)) seen.emplace(caller, method_index_operand(ins));

  std::vector<CallEdge> edges;
  edges.reserve(seen.size());
  for (const auto& [caller, callee] : seen) edges.push_back({dex.methods[caller], dex.methods[callee]});
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace mvd::dex
