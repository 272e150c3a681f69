#pragma once

#include <cstdint>
#include <string_view>

namespace mvd::dex {

/// Static description of one Dalvik opcode: mnemonic, instruction format id
/// (e.g. "35c") and total width in 16-bit code units.
struct OpcodeInfo {
  std::string_view name;
  std::string_view format;
  std::uint8_t width;
};

const OpcodeInfo& opcode_info(std::uint8_t opcode);

/// True for invoke instructions whose second code unit is a method_ids index
/// (invoke-kind, invoke-kind/range, invoke-polymorphic[/range]).
bool invokes_method(std::uint8_t opcode);

namespace op {
inline constexpr std::uint8_t kNop = 0x00;
inline constexpr std::uint8_t kMove = 0x01;
inline constexpr std::uint8_t kMoveResult = 0x0a;
inline constexpr std::uint8_t kMoveResultObject = 0x0c;
inline constexpr std::uint8_t kReturnVoid = 0x0e;
inline constexpr std::uint8_t kReturn = 0x0f;
inline constexpr std::uint8_t kReturnObject = 0x11;
inline constexpr std::uint8_t kConst4 = 0x12;
inline constexpr std::uint8_t kConst16 = 0x13;
inline constexpr std::uint8_t kConstString = 0x1a;
inline constexpr std::uint8_t kNewInstance = 0x22;
inline constexpr std::uint8_t kGoto = 0x28;
inline constexpr std::uint8_t kGoto16 = 0x29;
inline constexpr std::uint8_t kIfEq = 0x32;
inline constexpr std::uint8_t kIfEqz = 0x38;
inline constexpr std::uint8_t kIfNez = 0x39;
inline constexpr std::uint8_t kAget = 0x44;
inline constexpr std::uint8_t kAput = 0x4b;
inline constexpr std::uint8_t kIget = 0x52;
inline constexpr std::uint8_t kIput = 0x59;
inline constexpr std::uint8_t kSget = 0x60;
inline constexpr std::uint8_t kSput = 0x67;
inline constexpr std::uint8_t kInvokeVirtual = 0x6e;
inline constexpr std::uint8_t kInvokeSuper = 0x6f;
inline constexpr std::uint8_t kInvokeDirect = 0x70;
inline constexpr std::uint8_t kInvokeStatic = 0x71;
inline constexpr std::uint8_t kInvokeInterface = 0x72;
inline constexpr std::uint8_t kInvokeVirtualRange = 0x74;
inline constexpr std::uint8_t kAddInt = 0x90;
inline constexpr std::uint8_t kAddInt2Addr = 0xb0;
inline constexpr std::uint8_t kAddIntLit8 = 0xd8;
inline constexpr std::uint8_t kInvokePolymorphic = 0xfa;
inline constexpr std::uint8_t kInvokeCustom = 0xfc;
}  // namespace op

}  // namespace mvd::dex
