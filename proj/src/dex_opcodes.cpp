#include "mvdroid/dex_opcodes.hpp"

#include <array>

namespace mvd::dex {
namespace {

// Dalvik opcodes as of DEX 039. Width is the leading digit of the format id.
constexpr std::array<OpcodeInfo, 256> kOpcodes = {{
    {"nop", "10x", 1},  // 0x00
    {"move", "12x", 1},  // 0x01
    {"move/from16", "22x", 2},  // 0x02
    {"move/16", "32x", 3},  // 0x03
    {"move-wide", "12x", 1},  // 0x04
    {"move-wide/from16", "22x", 2},  // 0x05
    {"move-wide/16", "32x", 3},  // 0x06
    {"move-object", "12x", 1},  // 0x07
    {"move-object/from16", "22x", 2},  // 0x08
    {"move-object/16", "32x", 3},  // 0x09
    {"move-result", "11x", 1},  // 0x0a
    {"move-result-wide", "11x", 1},  // 0x0b
    {"move-result-object", "11x", 1},  // 0x0c
    {"move-exception", "11x", 1},  // 0x0d
    {"return-void", "10x", 1},  // 0x0e
    {"return", "11x", 1},  // 0x0f
    {"return-wide", "11x", 1},  // 0x10
    {"return-object", "11x", 1},  // 0x11
    {"const/4", "11n", 1},  // 0x12
    {"const/16", "21s", 2},  // 0x13
    {"const", "31i", 3},  // 0x14
    {"const/high16", "21h", 2},  // 0x15
    {"const-wide/16", "21s", 2},  // 0x16
    {"const-wide/32", "31i", 3},  // 0x17
    {"const-wide", "51l", 5},  // 0x18
    {"const-wide/high16", "21h", 2},  // 0x19
    {"const-string", "21c", 2},  // 0x1a
    {"const-string/jumbo", "31c", 3},  // 0x1b
    {"const-class", "21c", 2},  // 0x1c
    {"monitor-enter", "11x", 1},  // 0x1d
    {"monitor-exit", "11x", 1},  // 0x1e
    {"check-cast", "21c", 2},  // 0x1f
    {"instance-of", "22c", 2},  // 0x20
    {"array-length", "12x", 1},  // 0x21
    {"new-instance", "21c", 2},  // 0x22
    {"new-array", "22c", 2},  // 0x23
    {"filled-new-array", "35c", 3},  // 0x24
    {"filled-new-array/range", "3rc", 3},  // 0x25
    {"fill-array-data", "31t", 3},  // 0x26
    {"throw", "11x", 1},  // 0x27
    {"goto", "10t", 1},  // 0x28
    {"goto/16", "20t", 2},  // 0x29
    {"goto/32", "30t", 3},  // 0x2a
    {"packed-switch", "31t", 3},  // 0x2b
    {"sparse-switch", "31t", 3},  // 0x2c
    {"cmpl-float", "23x", 2},  // 0x2d
    {"cmpg-float", "23x", 2},  // 0x2e
    {"cmpl-double", "23x", 2},  // 0x2f
    {"cmpg-double", "23x", 2},  // 0x30
    {"cmp-long", "23x", 2},  // 0x31
    {"if-eq", "22t", 2},  // 0x32
    {"if-ne", "22t", 2},  // 0x33
    {"if-lt", "22t", 2},  // 0x34
    {"if-ge", "22t", 2},  // 0x35
    {"if-gt", "22t", 2},  // 0x36
    {"if-le", "22t", 2},  // 0x37
    {"if-eqz", "21t", 2},  // 0x38
    {"if-nez", "21t", 2},  // 0x39
    {"if-ltz", "21t", 2},  // 0x3a
    {"if-gez", "21t", 2},  // 0x3b
    {"if-gtz", "21t", 2},  // 0x3c
    {"if-lez", "21t", 2},  // 0x3d
    {"unused-3e", "10x", 1},  // 0x3e
    {"unused-3f", "10x", 1},  // 0x3f
    {"unused-40", "10x", 1},  // 0x40
    {"unused-41", "10x", 1},  // 0x41
    {"unused-42", "10x", 1},  // 0x42
    {"unused-43", "10x", 1},  // 0x43
    {"aget", "23x", 2},  // 0x44
    {"aget-wide", "23x", 2},  // 0x45
    {"aget-object", "23x", 2},  // 0x46
    {"aget-boolean", "23x", 2},  // 0x47
    {"aget-byte", "23x", 2},  // 0x48
    {"aget-char", "23x", 2},  // 0x49
    {"aget-short", "23x", 2},  // 0x4a
    {"aput", "23x", 2},  // 0x4b
    {"aput-wide", "23x", 2},  // 0x4c
    {"aput-object", "23x", 2},  // 0x4d
    {"aput-boolean", "23x", 2},  // 0x4e
    {"aput-byte", "23x", 2},  // 0x4f
    {"aput-char", "23x", 2},  // 0x50
    {"aput-short", "23x", 2},  // 0x51
    {"iget", "22c", 2},  // 0x52
    {"iget-wide", "22c", 2},  // 0x53
    {"iget-object", "22c", 2},  // 0x54
    {"iget-boolean", "22c", 2},  // 0x55
    {"iget-byte", "22c", 2},  // 0x56
    {"iget-char", "22c", 2},  // 0x57
    {"iget-short", "22c", 2},  // 0x58
    {"iput", "22c", 2},  // 0x59
    {"iput-wide", "22c", 2},  // 0x5a
    {"iput-object", "22c", 2},  // 0x5b
    {"iput-boolean", "22c", 2},  // 0x5c
    {"iput-byte", "22c", 2},  // 0x5d
    {"iput-char", "22c", 2},  // 0x5e
    {"iput-short", "22c", 2},  // 0x5f
    {"sget", "21c", 2},  // 0x60
    {"sget-wide", "21c", 2},  // 0x61
    {"sget-object", "21c", 2},  // 0x62
    {"sget-boolean", "21c", 2},  // 0x63
    {"sget-byte", "21c", 2},  // 0x64
    {"sget-char", "21c", 2},  // 0x65
    {"sget-short", "21c", 2},  // 0x66
    {"sput", "21c", 2},  // 0x67
    {"sput-wide", "21c", 2},  // 0x68
    {"sput-object", "21c", 2},  // 0x69
    {"sput-boolean", "21c", 2},  // 0x6a
    {"sput-byte", "21c", 2},  // 0x6b
    {"sput-char", "21c", 2},  // 0x6c
    {"sput-short", "21c", 2},  // 0x6d
    {"invoke-virtual", "35c", 3},  // 0x6e
    {"invoke-super", "35c", 3},  // 0x6f
    {"invoke-direct", "35c", 3},  // 0x70
    {"invoke-static", "35c", 3},  // 0x71
    {"invoke-interface", "35c", 3},  // 0x72
    {"unused-73", "10x", 1},  // 0x73
    {"invoke-virtual/range", "3rc", 3},  // 0x74
    {"invoke-super/range", "3rc", 3},  // 0x75
    {"invoke-direct/range", "3rc", 3},  // 0x76
    {"invoke-static/range", "3rc", 3},  // 0x77
    {"invoke-interface/range", "3rc", 3},  // 0x78
    {"unused-79", "10x", 1},  // 0x79
    {"unused-7a", "10x", 1},  // 0x7a
    {"neg-int", "12x", 1},  // 0x7b
    {"not-int", "12x", 1},  // 0x7c
    {"neg-long", "12x", 1},  // 0x7d
    {"not-long", "12x", 1},  // 0x7e
    {"neg-float", "12x", 1},  // 0x7f
    {"neg-double", "12x", 1},  // 0x80
    {"int-to-long", "12x", 1},  // 0x81
    {"int-to-float", "12x", 1},  // 0x82
    {"int-to-double", "12x", 1},  // 0x83
    {"long-to-int", "12x", 1},  // 0x84
    {"long-to-float", "12x", 1},  // 0x85
    {"long-to-double", "12x", 1},  // 0x86
    {"float-to-int", "12x", 1},  // 0x87
    {"float-to-long", "12x", 1},  // 0x88
    {"float-to-double", "12x", 1},  // 0x89
    {"double-to-int", "12x", 1},  // 0x8a
    {"double-to-long", "12x", 1},  // 0x8b
    {"double-to-float", "12x", 1},  // 0x8c
    {"int-to-byte", "12x", 1},  // 0x8d
    {"int-to-char", "12x", 1},  // 0x8e
    {"int-to-short", "12x", 1},  // 0x8f
    {"add-int", "23x", 2},  // 0x90
    {"sub-int", "23x", 2},  // 0x91
    {"mul-int", "23x", 2},  // 0x92
    {"div-int", "23x", 2},  // 0x93
    {"rem-int", "23x", 2},  // 0x94
    {"and-int", "23x", 2},  // 0x95
    {"or-int", "23x", 2},  // 0x96
    {"xor-int", "23x", 2},  // 0x97
    {"shl-int", "23x", 2},  // 0x98
    {"shr-int", "23x", 2},  // 0x99
    {"ushr-int", "23x", 2},  // 0x9a
    {"add-long", "23x", 2},  // 0x9b
    {"sub-long", "23x", 2},  // 0x9c
    {"mul-long", "23x", 2},  // 0x9d
    {"div-long", "23x", 2},  // 0x9e
    {"rem-long", "23x", 2},  // 0x9f
    {"and-long", "23x", 2},  // 0xa0
    {"or-long", "23x", 2},  // 0xa1
    {"xor-long", "23x", 2},  // 0xa2
    {"shl-long", "23x", 2},  // 0xa3
    {"shr-long", "23x", 2},  // 0xa4
    {"ushr-long", "23x", 2},  // 0xa5
    {"add-float", "23x", 2},  // 0xa6
    {"sub-float", "23x", 2},  // 0xa7
    {"mul-float", "23x", 2},  // 0xa8
    {"div-float", "23x", 2},  // 0xa9
    {"rem-float", "23x", 2},  // 0xaa
    {"add-double", "23x", 2},  // 0xab
    {"sub-double", "23x", 2},  // 0xac
    {"mul-double", "23x", 2},  // 0xad
    {"div-double", "23x", 2},  // 0xae
    {"rem-double", "23x", 2},  // 0xaf
    {"add-int/2addr", "12x", 1},  // 0xb0
    {"sub-int/2addr", "12x", 1},  // 0xb1
    {"mul-int/2addr", "12x", 1},  // 0xb2
    {"div-int/2addr", "12x", 1},  // 0xb3
    {"rem-int/2addr", "12x", 1},  // 0xb4
    {"and-int/2addr", "12x", 1},  // 0xb5
    {"or-int/2addr", "12x", 1},  // 0xb6
    {"xor-int/2addr", "12x", 1},  // 0xb7
    {"shl-int/2addr", "12x", 1},  // 0xb8
    {"shr-int/2addr", "12x", 1},  // 0xb9
    {"ushr-int/2addr", "12x", 1},  // 0xba
    {"add-long/2addr", "12x", 1},  // 0xbb
    {"sub-long/2addr", "12x", 1},  // 0xbc
    {"mul-long/2addr", "12x", 1},  // 0xbd
    {"div-long/2addr", "12x", 1},  // 0xbe
    {"rem-long/2addr", "12x", 1},  // 0xbf
    {"and-long/2addr", "12x", 1},  // 0xc0
    {"or-long/2addr", "12x", 1},  // 0xc1
    {"xor-long/2addr", "12x", 1},  // 0xc2
    {"shl-long/2addr", "12x", 1},  // 0xc3
    {"shr-long/2addr", "12x", 1},  // 0xc4
    {"ushr-long/2addr", "12x", 1},  // 0xc5
    {"add-float/2addr", "12x", 1},  // 0xc6
    {"sub-float/2addr", "12x", 1},  // 0xc7
    {"mul-float/2addr", "12x", 1},  // 0xc8
    {"div-float/2addr", "12x", 1},  // 0xc9
    {"rem-float/2addr", "12x", 1},  // 0xca
    {"add-double/2addr", "12x", 1},  // 0xcb
    {"sub-double/2addr", "12x", 1},  // 0xcc
    {"mul-double/2addr", "12x", 1},  // 0xcd
    {"div-double/2addr", "12x", 1},  // 0xce
    {"rem-double/2addr", "12x", 1},  // 0xcf
    {"add-int/lit16", "22s", 2},  // 0xd0
    {"rsub-int", "22s", 2},  // 0xd1
    {"mul-int/lit16", "22s", 2},  // 0xd2
    {"div-int/lit16", "22s", 2},  // 0xd3
    {"rem-int/lit16", "22s", 2},  // 0xd4
    {"and-int/lit16", "22s", 2},  // 0xd5
    {"or-int/lit16", "22s", 2},  // 0xd6
    {"xor-int/lit16", "22s", 2},  // 0xd7
    {"add-int/lit8", "22b", 2},  // 0xd8
    {"rsub-int/lit8", "22b", 2},  // 0xd9
    {"mul-int/lit8", "22b", 2},  // 0xda
    {"div-int/lit8", "22b", 2},  // 0xdb
    {"rem-int/lit8", "22b", 2},  // 0xdc
    {"and-int/lit8", "22b", 2},  // 0xdd
    {"or-int/lit8", "22b", 2},  // 0xde
    {"xor-int/lit8", "22b", 2},  // 0xdf
    {"shl-int/lit8", "22b", 2},  // 0xe0
    {"shr-int/lit8", "22b", 2},  // 0xe1
    {"ushr-int/lit8", "22b", 2},  // 0xe2
    {"unused-e3", "10x", 1},  // 0xe3
    {"unused-e4", "10x", 1},  // 0xe4
    {"unused-e5", "10x", 1},  // 0xe5
    {"unused-e6", "10x", 1},  // 0xe6
    {"unused-e7", "10x", 1},  // 0xe7
    {"unused-e8", "10x", 1},  // 0xe8
    {"unused-e9", "10x", 1},  // 0xe9
    {"unused-ea", "10x", 1},  // 0xea
    {"unused-eb", "10x", 1},  // 0xeb
    {"unused-ec", "10x", 1},  // 0xec
    {"unused-ed", "10x", 1},  // 0xed
    {"unused-ee", "10x", 1},  // 0xee
    {"unused-ef", "10x", 1},  // 0xef
    {"unused-f0", "10x", 1},  // 0xf0
    {"unused-f1", "10x", 1},  // 0xf1
    {"unused-f2", "10x", 1},  // 0xf2
    {"unused-f3", "10x", 1},  // 0xf3
    {"unused-f4", "10x", 1},  // 0xf4
    {"unused-f5", "10x", 1},  // 0xf5
    {"unused-f6", "10x", 1},  // 0xf6
    {"unused-f7", "10x", 1},  // 0xf7
    {"unused-f8", "10x", 1},  // 0xf8
    {"unused-f9", "10x", 1},  // 0xf9
    {"invoke-polymorphic", "45cc", 4},  // 0xfa
    {"invoke-polymorphic/range", "4rcc", 4},  // 0xfb
    {"invoke-custom", "35c", 3},  // 0xfc
    {"invoke-custom/range", "3rc", 3},  // 0xfd
    {"const-method-handle", "21c", 2},  // 0xfe
    {"const-method-type", "21c", 2},  // 0xff
}};

}  // namespace

const OpcodeInfo& opcode_info(std::uint8_t opcode) { return kOpcodes[opcode]; }

bool invokes_method(std::uint8_t opcode) {
  return (opcode >= 0x6e && opcode <= 0x72) || (opcode >= 0x74 && opcode <= 0x78) || opcode == 0xfa ||
         opcode == 0xfb;
}

}  // namespace mvd::dex
