#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvdroid/bytes.hpp"
#include "mvdroid/ingest.hpp"

namespace mvd::dex {

inline constexpr std::size_t kHeaderSize = 0x70;
inline constexpr std::uint32_t kNoIndex = 0xffffffff;

struct Header {
  std::array<std::uint8_t, 8> magic{};
  std::uint32_t checksum = 0;
  std::array<std::uint8_t, 20> signature{};
  std::uint32_t file_size = 0;
  std::uint32_t header_size = 0;
  std::uint32_t endian_tag = 0;
  std::uint32_t link_size = 0, link_off = 0;
  std::uint32_t map_off = 0;
  std::uint32_t string_ids_size = 0, string_ids_off = 0;
  std::uint32_t type_ids_size = 0, type_ids_off = 0;
  std::uint32_t proto_ids_size = 0, proto_ids_off = 0;
  std::uint32_t field_ids_size = 0, field_ids_off = 0;
  std::uint32_t method_ids_size = 0, method_ids_off = 0;
  std::uint32_t class_defs_size = 0, class_defs_off = 0;
  std::uint32_t data_size = 0, data_off = 0;
};

struct ProtoId {
  std::uint32_t shorty_idx = 0;
  std::uint32_t return_type_idx = 0;
  std::uint32_t parameters_off = 0;
  std::vector<std::uint16_t> parameters;
};

struct FieldId {
  std::uint16_t class_idx = 0;
  std::uint16_t type_idx = 0;
  std::uint32_t name_idx = 0;
};

struct MethodId {
  std::uint16_t class_idx = 0;
  std::uint16_t proto_idx = 0;
  std::uint32_t name_idx = 0;
};

struct ClassDef {
  std::uint32_t class_idx = 0;
  std::uint32_t access_flags = 0;
  std::uint32_t superclass_idx = kNoIndex;
  std::uint32_t interfaces_off = 0;
  std::uint32_t source_file_idx = kNoIndex;
  std::uint32_t annotations_off = 0;
  std::uint32_t class_data_off = 0;
  std::uint32_t static_values_off = 0;
};

/// A resolved method_ids entry. Ordering is (class, name, proto), which is
/// also the order the opcode view walks method bodies in.
struct MethodRef {
  std::string class_descriptor;
  std::string name;
  std::string proto;  // e.g. "(Ljava/lang/String;I)V"
  bool is_local = false;

  std::string key() const { return class_descriptor + "->" + name + proto; }

  friend bool operator==(const MethodRef& a, const MethodRef& b) {
    return a.class_descriptor == b.class_descriptor && a.name == b.name && a.proto == b.proto;
  }
  friend std::strong_ordering operator<=>(const MethodRef& a, const MethodRef& b) {
    if (auto c = a.class_descriptor <=> b.class_descriptor; c != 0) return c;
    if (auto c = a.name <=> b.name; c != 0) return c;
    return a.proto <=> b.proto;
  }
};

struct Instruction {
  std::uint32_t offset = 0;  // in 16-bit code units from the start of insns
  std::uint8_t opcode = 0;
  std::vector<std::uint8_t> operand_bytes;  // the instruction's bytes after the opcode byte
};

struct CodeItem {
  std::uint16_t registers = 0;
  std::uint16_t ins = 0;
  std::uint16_t outs = 0;
  std::uint16_t tries = 0;
  std::uint32_t insns_units = 0;
  std::vector<Instruction> instructions;
};

struct DexFile {
  Header header;
  std::vector<std::uint32_t> string_data_offsets;
  std::vector<std::string> strings;  // raw MUTF-8
  std::vector<std::uint32_t> type_descriptor_idx;
  std::vector<std::string> types;
  std::vector<ProtoId> protos;
  std::vector<std::string> proto_strings;
  std::vector<FieldId> fields;
  std::vector<MethodId> method_ids;
  std::vector<ClassDef> class_defs;
  std::vector<MethodRef> methods;            // parallel to method_ids
  std::map<std::uint32_t, CodeItem> code_items;  // keyed by method_ids index

  const CodeItem* code_for(std::uint32_t method_idx) const {
    auto it = code_items.find(method_idx);
    return it == code_items.end() ? nullptr : &it->second;
  }
};

/// Parses a single DEX image. Errors: `BadMagic`, `TruncatedFile`,
/// `IndexOutOfRange`.
DexFile parse_dex_file(ByteSpan bytes);

/// Parses a concatenated dex stream using its per-file index.
std::vector<DexFile> parse_dex(const ArtifactStream& stream);

/// Parses a concatenated dex stream by following each header's file_size.
std::vector<DexFile> parse_dex(ByteSpan stream);

/// Re-encodes the six id sections (string, type, proto, field, method,
/// class_def) in file order from the parsed tables.
Bytes serialize_index_sections(const DexFile& dex);

struct CallEdge {
  MethodRef caller;
  MethodRef callee;
  friend bool operator==(const CallEdge&, const CallEdge&) = default;
  friend auto operator<=>(const CallEdge&, const CallEdge&) = default;
};

/// One edge per distinct (caller, callee) pair found in invoke instructions,
/// sorted by (caller, callee). Callees are the declared method reference;
/// no dispatch resolution is attempted.
std::vector<CallEdge> invoke_edges(const DexFile& dex);

}  // namespace mvd::dex
