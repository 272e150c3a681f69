#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvdroid/bytes.hpp"

namespace mvd::dex {

struct MethodSpec {
  std::string class_descriptor;
  std::string name;
  std::string return_type = "V";
  std::vector<std::string> params;

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

/// One assembled instruction. When `method_ref` or `string_ref` is set, the
/// builder patches the resolved index into code unit 1.
struct AsmInsn {
  std::vector<std::uint16_t> units;
  std::optional<MethodSpec> method_ref;
  std::optional<std::string> string_ref;
};

namespace asm_ {
AsmInsn raw(std::vector<std::uint16_t> units);
AsmInsn nop();
AsmInsn return_void();
AsmInsn return_value(std::uint8_t reg);
AsmInsn const4(std::uint8_t reg, std::int8_t value);
AsmInsn move(std::uint8_t dst, std::uint8_t src);
AsmInsn move_result(std::uint8_t reg);
AsmInsn goto_(std::int8_t offset);
AsmInsn if_eqz(std::uint8_t reg, std::int16_t offset);
AsmInsn if_eq(std::uint8_t a, std::uint8_t b, std::int16_t offset);
AsmInsn aget(std::uint8_t dst, std::uint8_t array, std::uint8_t index);
AsmInsn aput(std::uint8_t src, std::uint8_t array, std::uint8_t index);
AsmInsn add_int(std::uint8_t dst, std::uint8_t a, std::uint8_t b);
AsmInsn const_string(std::uint8_t reg, std::string value);
/// invoke-kind {args}, method. At most five argument registers.
AsmInsn invoke(std::uint8_t opcode, MethodSpec target, std::vector<std::uint8_t> args = {});
}  // namespace asm_

struct MethodDef {
  MethodSpec spec;
  std::uint32_t access_flags = 0x0001;  // public
  bool direct = false;                  // direct list (static/private/ctor) vs virtual list
  std::uint16_t registers = 4;
  std::uint16_t ins = 0;
  std::uint16_t outs = 0;
  std::vector<AsmInsn> code;  // empty + abstract flag => no code item
};

struct ClassSpec {
  std::string descriptor;
  std::string superclass = "Ljava/lang/Object;";
  std::uint32_t access_flags = 0x0001;
  std::vector<MethodDef> methods;
};

/// Assembles a complete, well-formed DEX 035 image: sorted id tables, a
/// data section holding type lists, code items, class data and string data,
/// a map list and an Adler-32 checksum. The SHA-1 signature is left zero.
class DexBuilder {
 public:
  void add_class(ClassSpec cls) { classes_.push_back(std::move(cls)); }
  Bytes build() const;

 private:
  std::vector<ClassSpec> classes_;
};

}  // namespace mvd::dex
