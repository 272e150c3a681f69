#include <doctest.h>

#include "fixture_util.hpp"
#include "mvdroid/dex.hpp"
#include "mvdroid/dex_opcodes.hpp"
#include "mvdroid/dex_writer.hpp"

using namespace mvd;

TEST_SUITE("dex") {

TEST_CASE("golden dex parses to the expected tables") {
  const Bytes raw = fixture::bytes("golden.dex");
  const auto& exp = fixture::expected()["dex"];
  const dex::DexFile d = dex::parse_dex_file(raw);

  CHECK(d.header.file_size == exp["file_size"].get<std::uint32_t>());
  CHECK(d.header.data_off == exp["data_off"].get<std::uint32_t>());
  CHECK(d.header.data_size == exp["data_size"].get<std::uint32_t>());
  CHECK(d.header.map_off == exp["map_off"].get<std::uint32_t>());
  CHECK(d.strings == exp["strings"].get<std::vector<std::string>>());
  CHECK(d.types == exp["types"].get<std::vector<std::string>>());

  REQUIRE(d.protos.size() == exp["protos"].size());
  for (std::size_t i = 0; i < d.protos.size(); ++i) {
    const auto& p = exp["protos"][i];
    CHECK(d.strings[d.protos[i].shorty_idx] == p["shorty"].get<std::string>());
    CHECK(d.types[d.protos[i].return_type_idx] == p["return"].get<std::string>());
    std::vector<std::string> params;
    for (auto t : d.protos[i].parameters) params.push_back(d.types[t]);
    CHECK(params == p["params"].get<std::vector<std::string>>());
  }

  REQUIRE(d.fields.size() == exp["fields"].size());
  for (std::size_t i = 0; i < d.fields.size(); ++i) {
    CHECK(d.types[d.fields[i].class_idx] == exp["fields"][i]["class"].get<std::string>());
    CHECK(d.types[d.fields[i].type_idx] == exp["fields"][i]["type"].get<std::string>());
    CHECK(d.strings[d.fields[i].name_idx] == exp["fields"][i]["name"].get<std::string>());
  }

  REQUIRE(d.methods.size() == exp["methods"].size());
  for (std::size_t i = 0; i < d.methods.size(); ++i) {
    CHECK(d.methods[i].class_descriptor == exp["methods"][i]["class"].get<std::string>());
    CHECK(d.methods[i].name == exp["methods"][i]["name"].get<std::string>());
    CHECK(d.methods[i].proto == exp["methods"][i]["proto"].get<std::string>());
  }

  REQUIRE(d.class_defs.size() == exp["class_defs"].size());
  for (std::size_t i = 0; i < d.class_defs.size(); ++i) {
    const auto& c = exp["class_defs"][i];
    CHECK(d.types[d.class_defs[i].class_idx] == c["class"].get<std::string>());
    CHECK(d.class_defs[i].access_flags == c["access"].get<std::uint32_t>());
    CHECK(d.types[d.class_defs[i].superclass_idx] == c["superclass"].get<std::string>());
    CHECK(d.class_defs[i].class_data_off == c["class_data_off"].get<std::uint32_t>());
  }

  REQUIRE(d.code_items.size() == exp["code"].size());
  for (const auto& [key, c] : exp["code"].items()) {
    const auto* code = d.code_for(static_cast<std::uint32_t>(std::stoul(key)));
    REQUIRE(code != nullptr);
    CHECK(code->registers == c["registers"].get<int>());
    CHECK(code->ins == c["ins"].get<int>());
    CHECK(code->outs == c["outs"].get<int>());
    CHECK(code->insns_units == c["insns_units"].get<std::uint32_t>());
    std::vector<std::array<std::uint32_t, 2>> listing;
    for (const auto& ins : code->instructions) listing.push_back({ins.offset, ins.opcode});
    CHECK(listing == c["instructions"].get<std::vector<std::array<std::uint32_t, 2>>>());
  }

  std::vector<std::array<std::size_t, 2>> edges;
  const auto idx = [&](const dex::MethodRef& m) {
    return static_cast<std::size_t>(std::find(d.methods.begin(), d.methods.end(), m) - d.methods.begin());
  };
  for (const auto& e : dex::invoke_edges(d)) edges.push_back({idx(e.caller), idx(e.callee)});
  CHECK(edges == exp["edges"].get<std::vector<std::array<std::size_t, 2>>>());
}

TEST_CASE("operand bytes follow the opcode byte") {
  const dex::DexFile d = dex::parse_dex_file(fixture::bytes("golden.dex"));
  // Main.onCreate starts with invoke-super {v1, v2}, Activity.onCreate (method 1)
  const auto* code = d.code_for(6);
  REQUIRE(code != nullptr);
  const auto& ins = code->instructions.front();
  CHECK(ins.opcode == 0x6f);
  CHECK(ins.operand_bytes == std::vector<std::uint8_t>{0x20, 0x01, 0x00, 0x21, 0x00});
}

TEST_CASE("index sections re-serialize byte for byte") {
  const Bytes raw = fixture::bytes("golden.dex");
  const dex::DexFile d = dex::parse_dex_file(raw);
  const Bytes ids = dex::serialize_index_sections(d);
  CHECK(ids == Bytes(raw.begin() + dex::kHeaderSize, raw.begin() + d.header.data_off));
}

TEST_CASE("malformed dex inputs") {
  const Bytes raw = fixture::bytes("golden.dex");
  SUBCASE("bad magic") {
    Bytes b = raw;
    b[0] = 'x';
    CHECK_THROWS_WITH_AS(dex::parse_dex_file(b), doctest::Contains("BadMagic"), Error);
  }
  SUBCASE("truncated") {
    CHECK_THROWS_WITH_AS(dex::parse_dex_file(ByteSpan(raw).first(0x50)), doctest::Contains("TruncatedFile"), Error);
    CHECK_THROWS_WITH_AS(dex::parse_dex_file(ByteSpan(raw).first(raw.size() - 10)),
                         doctest::Contains("TruncatedFile"), Error);
  }
  SUBCASE("index out of range") {
    Bytes b = raw;
    // first method_id's class_idx -> 0xffff
    const std::uint32_t method_ids_off = b[0x5c] | (b[0x5d] << 8) | (b[0x5e] << 16) | (b[0x5f] << 24);
    b[method_ids_off] = 0xff;
    b[method_ids_off + 1] = 0xff;
    CHECK_THROWS_WITH_AS(dex::parse_dex_file(b), doctest::Contains("IndexOutOfRange"), Error);
  }
}

TEST_CASE("concatenated dex stream") {
  const Bytes raw = fixture::bytes("golden.dex");
  Bytes two = raw;
  two.insert(two.end(), raw.begin(), raw.end());
  const auto files = dex::parse_dex(ByteSpan(two));
  REQUIRE(files.size() == 2);
  CHECK(files[1].methods == files[0].methods);
}

TEST_CASE("builder output parses back") {
  dex::DexBuilder b;
  dex::ClassSpec cls;
  cls.descriptor = "Lorg/demo/A;";
  const dex::MethodSpec target{"Landroid/telephony/SmsManager;", "sendTextMessage", "V",
                               {"Ljava/lang/String;", "Ljava/lang/String;"}};
  dex::MethodDef run;
  run.spec = {"Lorg/demo/A;", "run", "V", {}};
  run.outs = 3;
  run.code = {dex::asm_::const_string(0, "5554"), dex::asm_::invoke(0x6e, target, {1, 0, 0}),
              dex::asm_::return_void()};
  cls.methods.push_back(run);
  b.add_class(cls);
  const dex::DexFile d = dex::parse_dex_file(b.build());
  CHECK(std::find(d.strings.begin(), d.strings.end(), "5554") != d.strings.end());
  const auto edges = dex::invoke_edges(d);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].caller.key() == "Lorg/demo/A;->run()V");
  CHECK(edges[0].callee.key() == "Landroid/telephony/SmsManager;->sendTextMessage(Ljava/lang/String;Ljava/lang/String;)V");
  CHECK(edges[0].caller.is_local);
  CHECK_FALSE(edges[0].callee.is_local);
}

TEST_CASE("opcode table widths") {
  CHECK(dex::opcode_info(0x0e).width == 1);
  CHECK(dex::opcode_info(0x6e).width == 3);
  CHECK(dex::opcode_info(0x18).width == 5);  // const-wide
  CHECK(dex::invokes_method(0x74));
  CHECK_FALSE(dex::invokes_method(0x73));
}

}  // TEST_SUITE
