#include "mvdroid/dex_writer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <zlib.h>

#include "mvdroid/dex.hpp"
#include "mvdroid/dex_opcodes.hpp"

namespace mvd::dex {
namespace asm_ {

AsmInsn raw(std::vector<std::uint16_t> units) { return AsmInsn{std::move(units), std::nullopt, std::nullopt}; }
AsmInsn nop() { return raw({0x0000}); }
AsmInsn return_void() { return raw({op::kReturnVoid}); }
AsmInsn return_value(std::uint8_t reg) { return raw({static_cast<std::uint16_t>(op::kReturn | (reg << 8))}); }
AsmInsn const4(std::uint8_t reg, std::int8_t value) {
  return raw({static_cast<std::uint16_t>(op::kConst4 | ((reg & 0xf) << 8) | ((value & 0xf) << 12))});
}
AsmInsn move(std::uint8_t dst, std::uint8_t src) {
  return raw({static_cast<std::uint16_t>(op::kMove | ((dst & 0xf) << 8) | ((src & 0xf) << 12))});
}
AsmInsn move_result(std::uint8_t reg) {
  return raw({static_cast<std::uint16_t>(op::kMoveResult | (reg << 8))});
}
AsmInsn goto_(std::int8_t offset) {
  return raw({static_cast<std::uint16_t>(op::kGoto | (static_cast<std::uint8_t>(offset) << 8))});
}
AsmInsn if_eqz(std::uint8_t reg, std::int16_t offset) {
  return raw({static_cast<std::uint16_t>(op::kIfEqz | (reg << 8)), static_cast<std::uint16_t>(offset)});
}
AsmInsn if_eq(std::uint8_t a, std::uint8_t b, std::int16_t offset) {
  return raw({static_cast<std::uint16_t>(op::kIfEq | ((a & 0xf) << 8) | ((b & 0xf) << 12)),
              static_cast<std::uint16_t>(offset)});
}
AsmInsn aget(std::uint8_t dst, std::uint8_t array, std::uint8_t index) {
  return raw({static_cast<std::uint16_t>(op::kAget | (dst << 8)), static_cast<std::uint16_t>(array | (index << 8))});
}
AsmInsn aput(std::uint8_t src, std::uint8_t array, std::uint8_t index) {
  return raw({static_cast<std::uint16_t>(op::kAput | (src << 8)), static_cast<std::uint16_t>(array | (index << 8))});
}
AsmInsn add_int(std::uint8_t dst, std::uint8_t a, std::uint8_t b) {
  return raw({static_cast<std::uint16_t>(op::kAddInt | (dst << 8)), static_cast<std::uint16_t>(a | (b << 8))});
}
AsmInsn const_string(std::uint8_t reg, std::string value) {
  AsmInsn i = raw({static_cast<std::uint16_t>(op::kConstString | (reg << 8)), 0});
  i.string_ref = std::move(value);
  return i;
}
AsmInsn invoke(std::uint8_t opcode, MethodSpec target, std::vector<std::uint8_t> args) {
  if (args.size() > 5) throw Error(ErrorCode::MalformedInput, "invoke takes at most five registers");
  std::uint8_t regs[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < args.size(); ++i) regs[i] = args[i] & 0xf;
  const auto count = static_cast<std::uint16_t>(args.size());
  AsmInsn i = raw({static_cast<std::uint16_t>(opcode | (regs[4] << 8) | (count << 12)), 0,
                   static_cast<std::uint16_t>(regs[0] | (regs[1] << 4) | (regs[2] << 8) | (regs[3] << 12))});
  i.method_ref = std::move(target);
  return i;
}

}  // namespace asm_

namespace {

char shorty_char(const std::string& descriptor) {
  const char c = descriptor.at(0);
  return (c == 'L' || c == '[') ? 'L' : c;
}

struct ProtoKey {
  std::uint32_t return_type = 0;
  std::vector<std::uint32_t> params;
  auto operator<=>(const ProtoKey&) const = default;
};

struct MethodKey {
  std::uint32_t class_idx = 0;
  std::uint32_t name_idx = 0;
  std::uint32_t proto_idx = 0;
  auto operator<=>(const MethodKey&) const = default;
};

// Interned tables assembled in two passes: collect names, then sort and
// assign indices as the DEX format requires.
struct Tables {
  std::set<std::string> string_set;
  std::set<std::string> type_set;
  std::vector<std::string> strings;
  std::map<std::string, std::uint32_t> string_idx;
  std::vector<std::string> types;
  std::map<std::string, std::uint32_t> type_idx;
  std::vector<ProtoKey> protos;
  std::map<ProtoKey, std::uint32_t> proto_idx;
  std::vector<MethodKey> methods;
  std::map<MethodKey, std::uint32_t> method_idx;

  void note_type(const std::string& t) {
    type_set.insert(t);
    string_set.insert(t);
  }
  void note_method(const MethodSpec& m) {
    note_type(m.class_descriptor);
    note_type(m.return_type);
    for (const auto& p : m.params) note_type(p);
    string_set.insert(m.name);
    std::string shorty(1, shorty_char(m.return_type));
    for (const auto& p : m.params) shorty += shorty_char(p);
    string_set.insert(shorty);
  }
  ProtoKey proto_of(const MethodSpec& m) const {
    ProtoKey k{type_idx.at(m.return_type), {}};
    for (const auto& p : m.params) k.params.push_back(type_idx.at(p));
    return k;
  }
  MethodKey key_of(const MethodSpec& m) const {
    return {type_idx.at(m.class_descriptor), string_idx.at(m.name), proto_idx.at(proto_of(m))};
  }
  std::string shorty_of(const ProtoKey& p) const {
    std::string s(1, shorty_char(types[p.return_type]));
    for (auto t : p.params) s += shorty_char(types[t]);
    return s;
  }
};

struct MapItem {
  std::uint16_t type;
  std::uint32_t size;
  std::uint32_t offset;
};

}  // namespace

Bytes DexBuilder::build() const {
  Tables t;
  std::vector<MethodSpec> all_methods;
  for (const auto& cls : classes_) {
    t.note_type(cls.descriptor);
    if (!cls.superclass.empty()) t.note_type(cls.superclass);
    for (const auto& m : cls.methods) {
      if (m.spec.class_descriptor != cls.descriptor)
        throw Error(ErrorCode::MalformedInput, "method " + m.spec.name + " declared on a different class");
      t.note_method(m.spec);
      all_methods.push_back(m.spec);
      for (const auto& ins : m.code) {
        if (ins.method_ref) {
          t.note_method(*ins.method_ref);
          all_methods.push_back(*ins.method_ref);
        }
        if (ins.string_ref) t.string_set.insert(*ins.string_ref);
      }
    }
  }

  t.strings.assign(t.string_set.begin(), t.string_set.end());
  for (std::uint32_t i = 0; i < t.strings.size(); ++i) t.string_idx[t.strings[i]] = i;
  // type_ids are sorted by descriptor string index, which matches string order.
  t.types.assign(t.type_set.begin(), t.type_set.end());
  for (std::uint32_t i = 0; i < t.types.size(); ++i) t.type_idx[t.types[i]] = i;
  std::set<ProtoKey> proto_set;
  for (const auto& m : all_methods) proto_set.insert(t.proto_of(m));
  t.protos.assign(proto_set.begin(), proto_set.end());
  for (std::uint32_t i = 0; i < t.protos.size(); ++i) t.proto_idx[t.protos[i]] = i;
  std::set<MethodKey> method_set;
  for (const auto& m : all_methods) method_set.insert(t.key_of(m));
  t.methods.assign(method_set.begin(), method_set.end());
  for (std::uint32_t i = 0; i < t.methods.size(); ++i) t.method_idx[t.methods[i]] = i;

  const std::uint32_t string_ids_off = kHeaderSize;
  const std::uint32_t type_ids_off = string_ids_off + 4 * static_cast<std::uint32_t>(t.strings.size());
  const std::uint32_t proto_ids_off = type_ids_off + 4 * static_cast<std::uint32_t>(t.types.size());
  const std::uint32_t method_ids_off = proto_ids_off + 12 * static_cast<std::uint32_t>(t.protos.size());
  const std::uint32_t class_defs_off = method_ids_off + 8 * static_cast<std::uint32_t>(t.methods.size());
  const std::uint32_t data_off = class_defs_off + 32 * static_cast<std::uint32_t>(classes_.size());

  ByteWriter w;
  w.buffer().resize(data_off, 0);
  std::vector<MapItem> map;

  // type_lists
  std::vector<std::uint32_t> params_off(t.protos.size(), 0);
  std::uint32_t type_list_count = 0;
  w.pad_to(4);
  const auto type_lists_start = static_cast<std::uint32_t>(w.size());
  for (std::size_t i = 0; i < t.protos.size(); ++i) {
    if (t.protos[i].params.empty()) continue;
    w.pad_to(4);
    params_off[i] = static_cast<std::uint32_t>(w.size());
    w.u32(static_cast<std::uint32_t>(t.protos[i].params.size()));
    for (auto p : t.protos[i].params) w.u16(static_cast<std::uint16_t>(p));
    ++type_list_count;
  }
  if (type_list_count) map.push_back({0x1001, type_list_count, type_lists_start});

  // code items
  std::map<MethodKey, std::uint32_t> code_off;
  std::uint32_t code_count = 0;
  w.pad_to(4);
  const auto code_start = static_cast<std::uint32_t>(w.size());
  for (const auto& cls : classes_) {
    for (const auto& m : cls.methods) {
      if (m.code.empty()) continue;
      w.pad_to(4);
      code_off[t.key_of(m.spec)] = static_cast<std::uint32_t>(w.size());
      std::vector<std::uint16_t> units;
      for (const auto& ins : m.code) {
        std::vector<std::uint16_t> u = ins.units;
        if (ins.method_ref) u.at(1) = static_cast<std::uint16_t>(t.method_idx.at(t.key_of(*ins.method_ref)));
        if (ins.string_ref) u.at(1) = static_cast<std::uint16_t>(t.string_idx.at(*ins.string_ref));
        units.insert(units.end(), u.begin(), u.end());
      }
      w.u16(m.registers);
      w.u16(m.ins);
      w.u16(m.outs);
      w.u16(0);
      w.u32(0);
      w.u32(static_cast<std::uint32_t>(units.size()));
      for (auto u : units) w.u16(u);
      ++code_count;
    }
  }
  if (code_count) map.push_back({0x2001, code_count, code_start});

  // class_data
  std::vector<std::uint32_t> class_data_off(classes_.size(), 0);
  const auto class_data_start = static_cast<std::uint32_t>(w.size());
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    class_data_off[c] = static_cast<std::uint32_t>(w.size());
    std::vector<std::pair<std::uint32_t, const MethodDef*>> direct, virt;
    for (const auto& m : classes_[c].methods)
      (m.direct ? direct : virt).emplace_back(t.method_idx.at(t.key_of(m.spec)), &m);
    std::sort(direct.begin(), direct.end());
    std::sort(virt.begin(), virt.end());
    w.uleb128(0);
    w.uleb128(0);
    w.uleb128(static_cast<std::uint32_t>(direct.size()));
    w.uleb128(static_cast<std::uint32_t>(virt.size()));
    for (const auto* list : {&direct, &virt}) {
      std::uint32_t prev = 0;
      for (const auto& [idx, m] : *list) {
        w.uleb128(idx - prev);
        prev = idx;
        w.uleb128(m->access_flags);
        auto it = code_off.find(t.key_of(m->spec));
        w.uleb128(it == code_off.end() ? 0 : it->second);
      }
    }
  }
  if (!classes_.empty()) map.push_back({0x2000, static_cast<std::uint32_t>(classes_.size()), class_data_start});

  // string_data
  std::vector<std::uint32_t> string_data_off(t.strings.size());
  const auto string_data_start = static_cast<std::uint32_t>(w.size());
  for (std::size_t i = 0; i < t.strings.size(); ++i) {
    string_data_off[i] = static_cast<std::uint32_t>(w.size());
    w.uleb128(static_cast<std::uint32_t>(t.strings[i].size()));  // ASCII: utf16 length == byte length
    w.str(t.strings[i]);
    w.u8(0);
  }
  if (!t.strings.empty()) map.push_back({0x2002, static_cast<std::uint32_t>(t.strings.size()), string_data_start});

  // map_list
  w.pad_to(4);
  const auto map_off = static_cast<std::uint32_t>(w.size());
  map.push_back({0x1000, 1, map_off});
  std::vector<MapItem> full = {{0x0000, 1, 0}};
  if (!t.strings.empty()) full.push_back({0x0001, static_cast<std::uint32_t>(t.strings.size()), string_ids_off});
  if (!t.types.empty()) full.push_back({0x0002, static_cast<std::uint32_t>(t.types.size()), type_ids_off});
  if (!t.protos.empty()) full.push_back({0x0003, static_cast<std::uint32_t>(t.protos.size()), proto_ids_off});
  if (!t.methods.empty()) full.push_back({0x0005, static_cast<std::uint32_t>(t.methods.size()), method_ids_off});
  if (!classes_.empty()) full.push_back({0x0006, static_cast<std::uint32_t>(classes_.size()), class_defs_off});
  full.insert(full.end(), map.begin(), map.end());
  std::sort(full.begin(), full.end(), [](const MapItem& a, const MapItem& b) { return a.offset < b.offset; });
  w.u32(static_cast<std::uint32_t>(full.size()));
  for (const auto& item : full) {
    w.u16(item.type);
    w.u16(0);
    w.u32(item.size);
    w.u32(item.offset);
  }
  const auto file_size = static_cast<std::uint32_t>(w.size());

  // id sections
  for (std::size_t i = 0; i < t.strings.size(); ++i) w.patch<std::uint32_t>(string_ids_off + 4 * i, string_data_off[i]);
  for (std::size_t i = 0; i < t.types.size(); ++i)
    w.patch<std::uint32_t>(type_ids_off + 4 * i, t.string_idx.at(t.types[i]));
  for (std::size_t i = 0; i < t.protos.size(); ++i) {
    const std::size_t base = proto_ids_off + 12 * i;
    w.patch<std::uint32_t>(base, t.string_idx.at(t.shorty_of(t.protos[i])));
    w.patch<std::uint32_t>(base + 4, t.protos[i].return_type);
    w.patch<std::uint32_t>(base + 8, params_off[i]);
  }
  for (std::size_t i = 0; i < t.methods.size(); ++i) {
    const std::size_t base = method_ids_off + 8 * i;
    w.patch<std::uint16_t>(base, static_cast<std::uint16_t>(t.methods[i].class_idx));
    w.patch<std::uint16_t>(base + 2, static_cast<std::uint16_t>(t.methods[i].proto_idx));
    w.patch<std::uint32_t>(base + 4, t.methods[i].name_idx);
  }
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const std::size_t base = class_defs_off + 32 * c;
    w.patch<std::uint32_t>(base, t.type_idx.at(classes_[c].descriptor));
    w.patch<std::uint32_t>(base + 4, classes_[c].access_flags);
    w.patch<std::uint32_t>(base + 8,
                           classes_[c].superclass.empty() ? kNoIndex : t.type_idx.at(classes_[c].superclass));
    w.patch<std::uint32_t>(base + 12, 0);
    w.patch<std::uint32_t>(base + 16, kNoIndex);
    w.patch<std::uint32_t>(base + 20, 0);
    w.patch<std::uint32_t>(base + 24, class_data_off[c]);
    w.patch<std::uint32_t>(base + 28, 0);
  }

  // header
  const char magic[8] = {'d', 'e', 'x', '\n', '0', '3', '5', '\0'};
  for (int i = 0; i < 8; ++i) w.patch<std::uint8_t>(i, static_cast<std::uint8_t>(magic[i]));
  w.patch<std::uint32_t>(32, file_size);
  w.patch<std::uint32_t>(36, static_cast<std::uint32_t>(kHeaderSize));
  w.patch<std::uint32_t>(40, 0x12345678);
  w.patch<std::uint32_t>(52, map_off);
  const std::uint32_t sections[][2] = {
      {static_cast<std::uint32_t>(t.strings.size()), string_ids_off},
      {static_cast<std::uint32_t>(t.types.size()), type_ids_off},
      {static_cast<std::uint32_t>(t.protos.size()), proto_ids_off},
      {0, 0},
      {static_cast<std::uint32_t>(t.methods.size()), method_ids_off},
      {static_cast<std::uint32_t>(classes_.size()), class_defs_off},
  };
  for (int s = 0; s < 6; ++s) {
    w.patch<std::uint32_t>(56 + 8 * s, sections[s][0]);
    w.patch<std::uint32_t>(60 + 8 * s, sections[s][0] ? sections[s][1] : 0);
  }
  w.patch<std::uint32_t>(104, file_size - data_off);
  w.patch<std::uint32_t>(108, data_off);

  Bytes out = std::move(w.buffer());
  uLong adler = adler32(0L, Z_NULL, 0);
  adler = adler32(adler, out.data() + 12, static_cast<uInt>(out.size() - 12));
  ByteWriter fix;
  fix.buffer() = std::move(out);
  fix.patch<std::uint32_t>(8, static_cast<std::uint32_t>(adler));
  return std::move(fix.buffer());
}

}  // namespace mvd::dex
